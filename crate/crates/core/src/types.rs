//! Shared domain types: video dimensions, angles, force magnitudes and the
//! three force-prompt shapes.
//!
//! # Angle convention
//!
//! Screen-space angles are degrees in `[0, 360)`. `0` points toward `+x`
//! (rightward), `90` points screen-up. Because image rows grow downward, a
//! direction `θ` moves a point by `(cos θ, −sin θ)` in `(column, row)`.
//! World-space angles measured on the ground plane use the same numbers but
//! rotate from `+x` toward `+y`. Wind angles name the direction the wind
//! blows *toward*.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("force magnitude {0} outside [0, 1]")]
    Magnitude(f64),
    #[error("angle {0} is not finite")]
    Angle(f64),
    #[error("coordinate ({x}, {y}) is not a finite non-negative pixel position")]
    Coordinate { x: f64, y: f64 },
    #[error("point ({x}, {y}) lies outside a {width}x{height} frame")]
    OutOfFrame {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("a multi-force prompt needs at least one force")]
    EmptyMulti,
    #[error("invalid video dimensions: {0}")]
    Dims(String),
}

/// Frame count, channels, spatial size and frame rate shared by every tensor
/// and clip in a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct VideoDims {
    frames: u32,
    channels: u32,
    height: u32,
    width: u32,
    fps: u32,
}

#[derive(Deserialize)]
struct RawDims {
    frames: u32,
    channels: u32,
    height: u32,
    width: u32,
    fps: u32,
}

impl TryFrom<RawDims> for VideoDims {
    type Error = PromptError;
    fn try_from(r: RawDims) -> Result<Self, Self::Error> {
        VideoDims::with_channels(r.frames, r.channels, r.height, r.width, r.fps)
    }
}

impl Default for VideoDims {
    fn default() -> Self {
        Self {
            frames: 49,
            channels: 3,
            height: 480,
            width: 720,
            fps: 8,
        }
    }
}

impl VideoDims {
    pub fn new(frames: u32, height: u32, width: u32, fps: u32) -> Result<Self, PromptError> {
        Self::with_channels(frames, 3, height, width, fps)
    }

    /// Like [`VideoDims::new`] but with an explicit channel count, which must
    /// still be 3. Exists so decoders can reject foreign tensors with a typed
    /// error instead of silently assuming RGB.
    pub fn with_channels(
        frames: u32,
        channels: u32,
        height: u32,
        width: u32,
        fps: u32,
    ) -> Result<Self, PromptError> {
        if frames < 2 {
            return Err(PromptError::Dims(format!("frames = {frames}, need >= 2")));
        }
        if channels != 3 {
            return Err(PromptError::Dims(format!("channels = {channels}, need 3")));
        }
        if height == 0 || width == 0 {
            return Err(PromptError::Dims(format!("{width}x{height} frame")));
        }
        if fps == 0 {
            return Err(PromptError::Dims("fps = 0".into()));
        }
        Ok(Self {
            frames,
            channels,
            height,
            width,
            fps,
        })
    }

    pub fn frames(&self) -> u32 {
        self.frames
    }
    pub fn channels(&self) -> u32 {
        self.channels
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn fps(&self) -> u32 {
        self.fps
    }

    /// Same clip timing at a proportionally smaller (or larger) resolution.
    pub fn scaled(&self, scale: f64) -> Result<Self, PromptError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(PromptError::Dims(format!("scale {scale}")));
        }
        let h = ((self.height as f64 * scale).round() as u32).max(1);
        let w = ((self.width as f64 * scale).round() as u32).max(1);
        Self::new(self.frames, h, w, self.fps)
    }

    pub fn with_frames(&self, frames: u32) -> Result<Self, PromptError> {
        Self::new(frames, self.height, self.width, self.fps)
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.height as usize * self.width as usize
    }

    /// Clip duration in seconds (`frames / fps`).
    pub fn duration(&self) -> f64 {
        self.frames as f64 / self.fps as f64
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }
}

/// An angle in degrees, normalized once into `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn from_degrees(deg: f64) -> Result<Self, PromptError> {
        if !deg.is_finite() {
            return Err(PromptError::Angle(deg));
        }
        let mut r = deg.rem_euclid(360.0);
        // rem_euclid of a tiny negative value rounds up to exactly 360.
        if r >= 360.0 {
            r = 0.0;
        }
        Ok(Self(r))
    }

    pub fn from_radians(rad: f64) -> Result<Self, PromptError> {
        Self::from_degrees(rad.to_degrees())
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Unit step in `(column, row)` pixel space for this screen angle.
    pub fn screen_step(self) -> (f64, f64) {
        let r = self.radians();
        (r.cos(), -r.sin())
    }

    /// Mirror image across the screen's vertical axis (left/right swap).
    pub fn mirrored_horizontally(self) -> Self {
        Self::from_degrees(180.0 - self.0).expect("finite")
    }
}

impl TryFrom<f64> for Angle {
    type Error = PromptError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::from_degrees(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Dimensionless force magnitude in `[0, 1]`. `0` is a gentle but nonzero
/// force, `1` the strongest the simulators produce.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Magnitude(f64);

impl Magnitude {
    pub fn new(v: f64) -> Result<Self, PromptError> {
        if (0.0..=1.0).contains(&v) {
            Ok(Self(v))
        } else {
            Err(PromptError::Magnitude(v))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Magnitude {
    type Error = PromptError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Magnitude> for f64 {
    fn from(m: Magnitude) -> f64 {
        m.0
    }
}

/// Wind-style prompt: a uniform force field with magnitude and direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalForcePrompt {
    pub force: Magnitude,
    pub angle: Angle,
}

impl GlobalForcePrompt {
    pub fn new(force: f64, angle_deg: f64) -> Result<Self, PromptError> {
        Ok(Self {
            force: Magnitude::new(force)?,
            angle: Angle::from_degrees(angle_deg)?,
        })
    }
}

/// Poke-style prompt: an impulse applied at a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLocal")]
pub struct LocalForcePrompt {
    x: f64,
    y: f64,
    pub force: Magnitude,
    pub angle: Angle,
}

#[derive(Deserialize)]
struct RawLocal {
    x: f64,
    y: f64,
    force: Magnitude,
    angle: Angle,
}

impl TryFrom<RawLocal> for LocalForcePrompt {
    type Error = PromptError;
    fn try_from(r: RawLocal) -> Result<Self, Self::Error> {
        Self::new(r.x, r.y, r.force.get(), r.angle.degrees())
    }
}

impl LocalForcePrompt {
    /// Validates everything except the frame bound, which depends on the
    /// target dims; see [`LocalForcePrompt::new_in`] and [`LocalForcePrompt::check_in`].
    pub fn new(x: f64, y: f64, force: f64, angle_deg: f64) -> Result<Self, PromptError> {
        if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0) {
            return Err(PromptError::Coordinate { x, y });
        }
        Ok(Self {
            x,
            y,
            force: Magnitude::new(force)?,
            angle: Angle::from_degrees(angle_deg)?,
        })
    }

    pub fn new_in(
        x: f64,
        y: f64,
        force: f64,
        angle_deg: f64,
        dims: &VideoDims,
    ) -> Result<Self, PromptError> {
        let p = Self::new(x, y, force, angle_deg)?;
        p.check_in(dims)?;
        Ok(p)
    }

    pub fn check_in(&self, dims: &VideoDims) -> Result<(), PromptError> {
        if dims.contains(self.x, self.y) {
            Ok(())
        } else {
            Err(PromptError::OutOfFrame {
                x: self.x,
                y: self.y,
                width: dims.width(),
                height: dims.height(),
            })
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Several simultaneous pokes, rendered as several blobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LocalForcePrompt>", into = "Vec<LocalForcePrompt>")]
pub struct MultiForcePrompt(Vec<LocalForcePrompt>);

impl MultiForcePrompt {
    pub fn new(forces: Vec<LocalForcePrompt>) -> Result<Self, PromptError> {
        if forces.is_empty() {
            return Err(PromptError::EmptyMulti);
        }
        Ok(Self(forces))
    }

    pub fn forces(&self) -> &[LocalForcePrompt] {
        &self.0
    }
}

impl TryFrom<Vec<LocalForcePrompt>> for MultiForcePrompt {
    type Error = PromptError;
    fn try_from(v: Vec<LocalForcePrompt>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MultiForcePrompt> for Vec<LocalForcePrompt> {
    fn from(m: MultiForcePrompt) -> Self {
        m.0
    }
}

/// The force prompt attached to a dataset record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcePrompt {
    Global(GlobalForcePrompt),
    Local(LocalForcePrompt),
}

impl ForcePrompt {
    pub fn magnitude(&self) -> Magnitude {
        match self {
            Self::Global(g) => g.force,
            Self::Local(l) => l.force,
        }
    }

    pub fn angle(&self) -> Angle {
        match self {
            Self::Global(g) => g.angle,
            Self::Local(l) => l.angle,
        }
    }
}
