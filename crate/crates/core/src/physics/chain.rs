//! Damped elastic chain: a stand-in for a plant stem that sways when poked.
//!
//! Segments stack upward from a base anchor and bend within one vertical
//! plane (the sway plane, oriented by `sway_yaw`). Each segment carries its
//! absolute angle from vertical; torsional springs and dampers act on the
//! relative angle at every joint, the first joint tying segment 0 to the
//! ground. The poke is an angular impulse on the contacted segment.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::{ImpulseScale, SimClock, SimError};
use crate::types::{Angle, Magnitude};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Segment {
    /// rad from vertical, positive toward the sway-plane direction.
    pub angle: f64,
    /// rad/s.
    pub angular_velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub segments: Vec<Segment>,
    pub base: DVec3,
    /// m.
    pub segment_length: f64,
    /// N·m/rad.
    pub stiffness: f64,
    /// N·m·s/rad.
    pub damping: f64,
    /// kg·m² per segment.
    pub inertia: f64,
    /// Ground direction the chain bends toward for positive angles.
    pub sway_yaw: Angle,
}

impl ChainState {
    pub const DEFAULT_SEGMENTS: usize = 5;
    /// Default substeps per frame; keeps the stiffest chain mode resolved.
    pub const SUBSTEPS: u32 = 32;

    /// The default 5-segment, ~0.6 m stem at rest. Its slowest mode sways
    /// at about 1 Hz with ~5% damping.
    pub fn plant(base: DVec3, sway_yaw: Angle) -> Self {
        Self::straight(Self::DEFAULT_SEGMENTS, base, 0.12, 0.024, 3.8e-4, 4.8e-5, sway_yaw)
    }

    pub fn straight(
        segments: usize,
        base: DVec3,
        segment_length: f64,
        stiffness: f64,
        damping: f64,
        inertia: f64,
        sway_yaw: Angle,
    ) -> Self {
        Self {
            segments: vec![Segment::default(); segments],
            base,
            segment_length,
            stiffness,
            damping,
            inertia,
            sway_yaw,
        }
    }

    fn sway_dir(&self) -> DVec3 {
        let r = self.sway_yaw.radians();
        DVec3::new(r.cos(), r.sin(), 0.0)
    }

    /// Base followed by every segment end, bottom to top.
    pub fn joints(&self) -> Vec<DVec3> {
        let h = self.sway_dir();
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut p = self.base;
        out.push(p);
        for s in &self.segments {
            p += (h * s.angle.sin() + DVec3::Z * s.angle.cos()) * self.segment_length;
            out.push(p);
        }
        out
    }

    pub fn tip(&self) -> DVec3 {
        *self.joints().last().expect("at least the base")
    }

    /// Kinetic plus torsional-spring energy.
    pub fn energy(&self) -> f64 {
        let mut prev = 0.0;
        let mut e = 0.0;
        for s in &self.segments {
            let rel = s.angle - prev;
            e += 0.5 * self.inertia * s.angular_velocity * s.angular_velocity
                + 0.5 * self.stiffness * rel * rel;
            prev = s.angle;
        }
        e
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.segments.is_empty() {
            return Err(SimError::InvalidInitial("chain has no segments".into()));
        }
        let ok = self.stiffness > 0.0 && self.damping > 0.0 && self.inertia > 0.0 && self.segment_length > 0.0;
        if !ok {
            return Err(SimError::InvalidInitial(
                "chain stiffness, damping, inertia and length must be positive".into(),
            ));
        }
        Ok(())
    }

    fn step(&mut self, dt: f64, torques: &mut Vec<f64>) {
        let n = self.segments.len();
        torques.clear();
        torques.resize(n, 0.0);
        let (mut prev_a, mut prev_w) = (0.0, 0.0);
        for j in 0..n {
            let s = self.segments[j];
            // Joint j couples segment j to segment j-1 (or the ground).
            let t = self.stiffness * (s.angle - prev_a) + self.damping * (s.angular_velocity - prev_w);
            torques[j] -= t;
            if j > 0 {
                torques[j - 1] += t;
            }
            prev_a = s.angle;
            prev_w = s.angular_velocity;
        }
        for (s, t) in self.segments.iter_mut().zip(torques.iter()) {
            s.angular_velocity += t * dt / self.inertia;
            s.angle += s.angular_velocity * dt;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub impulse: ImpulseScale,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            impulse: ImpulseScale {
                min: 0.0004,
                max: 0.0016,
            },
        }
    }
}

/// A horizontal poke of one segment at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Poke {
    pub force: Magnitude,
    /// Ground-plane direction of the poke.
    pub angle: Angle,
    pub contact: usize,
}

/// Applies the poke, then integrates the damped oscillation. Returns one
/// snapshot per output frame; the first is taken just after the poke.
pub fn simulate_chain(
    chain: &ChainState,
    poke: Poke,
    params: &ChainParams,
    clock: &SimClock,
) -> Result<Vec<ChainState>, SimError> {
    chain.validate()?;
    if poke.contact >= chain.segments.len() {
        return Err(SimError::Index {
            index: poke.contact,
            len: chain.segments.len(),
        });
    }
    let mut state = chain.clone();
    let seg = state.segments[poke.contact];
    // Only the force component perpendicular to the segment inside the sway
    // plane produces torque; the lever arm reaches the segment's midpoint.
    let along_plane = (poke.angle.radians() - state.sway_yaw.radians()).cos();
    let perpendicular = along_plane * seg.angle.cos();
    let lever = (poke.contact as f64 + 0.5) * state.segment_length;
    let angular_impulse = params.impulse.impulse(poke.force) * lever * perpendicular;
    state.segments[poke.contact].angular_velocity += angular_impulse / state.inertia;

    let dt = clock.dt();
    let mut torques = Vec::with_capacity(state.segments.len());
    let mut frames = Vec::with_capacity(clock.frames() as usize);
    frames.push(state.clone());
    let mut step = 0usize;
    for _ in 1..clock.frames() {
        for _ in 0..clock.substeps() {
            state.step(dt, &mut torques);
            if state.segments.iter().any(|s| !s.angle.is_finite()) {
                return Err(SimError::Diverged { step });
            }
            step += 1;
        }
        frames.push(state.clone());
    }
    Ok(frames)
}

/// Largest horizontal tip excursion from the base over a run.
pub fn peak_deflection(frames: &[ChainState]) -> f64 {
    frames
        .iter()
        .map(|f| {
            let d = f.tip() - f.base;
            DVec3::new(d.x, d.y, 0.0).length()
        })
        .fold(0.0, f64::max)
}
