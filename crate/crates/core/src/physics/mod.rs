//! The three training simulators: rolling balls, wind-blown cloth flags and
//! a poked elastic chain standing in for a plant stem.
//!
//! World frame: meters, `+z` up, the ground is the plane `z = 0`. Ground
//! angles rotate from `+x` toward `+y`. Every simulator is a pure function
//! of its inputs; runs are single-threaded and bitwise repeatable.

pub mod ball;
pub mod chain;
pub mod cloth;

pub use ball::{simulate_ball, BallMaterial, BallParams, BallState, Push};
pub use chain::{simulate_chain, ChainParams, ChainState, Poke, Segment};
pub use cloth::{simulate_cloth, ClothParams, ClothState, Gust, WindField};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Magnitude, VideoDims};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("balls {0} and {1} overlap at t = 0")]
    Overlap(usize, usize),
    #[error("ball {0} has nonpositive mass or radius")]
    BadBall(usize),
    #[error("index {index} out of range for {len} objects")]
    Index { index: usize, len: usize },
    #[error("invalid initial state: {0}")]
    InvalidInitial(String),
    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },
    #[error("invalid clock: {0}")]
    Clock(String),
}

/// Integrator timing: `substeps` steps of `dt` per output frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    fps: u32,
    substeps: u32,
    frames: u32,
}

impl SimClock {
    pub fn new(fps: u32, substeps: u32, frames: u32) -> Result<Self, SimError> {
        if fps == 0 || substeps == 0 || frames < 2 {
            return Err(SimError::Clock(format!(
                "fps {fps}, substeps {substeps}, frames {frames}"
            )));
        }
        Ok(Self {
            fps,
            substeps,
            frames,
        })
    }

    /// Clock for a clip of `dims`, with the default 8 substeps per frame.
    pub fn for_dims(dims: &VideoDims) -> Self {
        Self::with_substeps(dims, 8)
    }

    pub fn with_substeps(dims: &VideoDims, substeps: u32) -> Self {
        Self::new(dims.fps(), substeps.max(1), dims.frames()).expect("dims are validated")
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.fps as f64 * self.substeps as f64)
    }
    pub fn substeps(&self) -> u32 {
        self.substeps
    }
    pub fn frames(&self) -> u32 {
        self.frames
    }
    pub fn fps(&self) -> u32 {
        self.fps
    }

    /// Seconds between sampled frames.
    pub fn frame_interval(&self) -> f64 {
        1.0 / self.fps as f64
    }
}

/// Affine map from a dimensionless force magnitude to a physical impulse.
/// `min > 0`: the weakest prompt is a gentle poke, never no force at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseScale {
    /// Impulse at `F = 0`, in N·s.
    pub min: f64,
    /// Impulse at `F = 1`, in N·s.
    pub max: f64,
}

impl ImpulseScale {
    pub fn new(min: f64, max: f64) -> Result<Self, SimError> {
        if !(min > 0.0 && max > min && max.is_finite()) {
            return Err(SimError::InvalidInitial(format!(
                "impulse scale [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn impulse(&self, force: Magnitude) -> f64 {
        self.min + (self.max - self.min) * force.get()
    }
}

/// Impulse for a ball push under the default ball calibration.
pub fn map_force_to_impulse(force: Magnitude) -> f64 {
    BallParams::default().impulse.impulse(force)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_duration_matches_clip() {
        let dims = VideoDims::default();
        let c = SimClock::for_dims(&dims);
        let total = c.dt() * c.substeps() as f64 * c.frames() as f64;
        assert!((total - dims.duration()).abs() < 1e-12);
        assert!(SimClock::new(8, 0, 49).is_err());
    }

    #[test]
    fn impulse_mapping_is_affine_with_a_floor() {
        let s = BallParams::default().impulse;
        let m = |f: f64| map_force_to_impulse(Magnitude::new(f).unwrap());
        assert!(m(0.0) > 0.0);
        assert_eq!(m(0.0), s.min);
        assert_eq!(m(1.0), s.max);
        assert!((m(0.5) - (s.min + s.max) / 2.0).abs() < 1e-15);
        assert!(ImpulseScale::new(0.0, 1.0).is_err());
    }
}
