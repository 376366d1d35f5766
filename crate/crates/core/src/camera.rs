//! Pinhole camera: world-to-pixel projection of points and forces.
//!
//! Pixel `(col, row)` is sampled at continuous coordinate `(col, row)`; the
//! principal point sits at `(w/2, h/2)`. Rows grow downward.

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Angle, LocalForcePrompt, Magnitude, PromptError, VideoDims};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("point {0:?} is behind the camera")]
    BehindCamera(DVec3),
    #[error("force direction projects to a degenerate screen vector")]
    DegenerateDirection,
    #[error("invalid camera: {0}")]
    Invalid(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub position: DVec3,
    pub target: DVec3,
    pub up: DVec3,
    /// Vertical field of view, degrees.
    pub vfov: f64,
    pub width: u32,
    pub height: u32,
}

/// Finite-difference step for screen-space force directions, meters.
const FORCE_EPSILON: f64 = 1e-4;

impl CameraModel {
    pub fn new(position: DVec3, target: DVec3, up: DVec3, vfov: f64, dims: &VideoDims) -> Result<Self, CameraError> {
        let cam = Self {
            position,
            target,
            up,
            vfov,
            width: dims.width(),
            height: dims.height(),
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera on a sphere around `target`: `azimuth` rotates from `+x`
    /// toward `+y`, `elevation` lifts above the ground plane (degrees).
    pub fn orbit(
        target: DVec3,
        azimuth: f64,
        elevation: f64,
        distance: f64,
        vfov: f64,
        dims: &VideoDims,
    ) -> Result<Self, CameraError> {
        let (az, el) = (azimuth.to_radians(), elevation.to_radians());
        let offset = DVec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * distance;
        Self::new(target + offset, target, DVec3::Z, vfov, dims)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.vfov > 10.0 && self.vfov < 120.0) {
            return Err(CameraError::Invalid(format!("vfov {} outside (10, 120)", self.vfov)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::Invalid("empty image".into()));
        }
        let fwd = self.target - self.position;
        if !fwd.is_finite() || fwd.length() == 0.0 {
            return Err(CameraError::Invalid("target coincides with position".into()));
        }
        if fwd.normalize().cross(self.up.normalize_or_zero()).length() < 1e-9 {
            return Err(CameraError::Invalid("view direction parallel to up".into()));
        }
        Ok(())
    }

    /// Same camera rendering at other dims (e.g. scaled previews).
    pub fn with_dims(&self, dims: &VideoDims) -> Self {
        Self {
            width: dims.width(),
            height: dims.height(),
            ..*self
        }
    }

    /// Orthonormal `(right, up, forward)`.
    pub fn basis(&self) -> (DVec3, DVec3, DVec3) {
        let f = (self.target - self.position).normalize();
        let r = f.cross(self.up).normalize();
        let u = r.cross(f);
        (r, u, f)
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.vfov.to_radians()).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    /// Distance along the optical axis.
    pub fn depth(&self, world: DVec3) -> f64 {
        (world - self.position).dot(self.basis().2)
    }

    pub fn project_point(&self, world: DVec3) -> Result<(f64, f64), CameraError> {
        let (r, u, f) = self.basis();
        let d = world - self.position;
        let z = d.dot(f);
        if z.is_nan() || z <= 1e-9 {
            return Err(CameraError::BehindCamera(world));
        }
        let fl = self.focal();
        let (cx, cy) = self.principal_point();
        Ok((cx + fl * d.dot(r) / z, cy - fl * d.dot(u) / z))
    }

    /// World-space ray through a pixel coordinate. The direction has unit
    /// component along the optical axis, so the ray parameter is depth.
    pub fn ray(&self, px: f64, py: f64) -> (DVec3, DVec3) {
        let (r, u, f) = self.basis();
        let fl = self.focal();
        let (cx, cy) = self.principal_point();
        (self.position, f + r * ((px - cx) / fl) + u * ((cy - py) / fl))
    }

    /// Where the ray through a pixel meets the ground plane `z = 0`.
    pub fn unproject_to_ground(&self, px: f64, py: f64) -> Option<DVec3> {
        let (o, d) = self.ray(px, py);
        if d.z >= 0.0 {
            return None;
        }
        let t = -o.z / d.z;
        Some(o + d * t)
    }

    /// Screen angle of a world direction applied at `point`.
    pub fn screen_angle(&self, point: DVec3, direction: DVec3) -> Result<Angle, CameraError> {
        let dir = direction.normalize_or_zero();
        if dir == DVec3::ZERO {
            return Err(CameraError::DegenerateDirection);
        }
        let (x0, y0) = self.project_point(point)?;
        let (x1, y1) = self.project_point(point + dir * FORCE_EPSILON)?;
        let (dx, dy) = (x1 - x0, y1 - y0);
        let scale = self.focal() * FORCE_EPSILON / self.depth(point);
        if (dx * dx + dy * dy).sqrt() < 1e-6 * scale {
            return Err(CameraError::DegenerateDirection);
        }
        Ok(Angle::from_radians((-dy).atan2(dx))?)
    }

    /// Projects a world force into a pixel-space poke prompt. The magnitude
    /// passes through unchanged.
    pub fn project_force(&self, point: DVec3, direction: DVec3, force: Magnitude) -> Result<LocalForcePrompt, CameraError> {
        let angle = self.screen_angle(point, direction)?;
        let (x, y) = self.project_point(point)?;
        let dims = VideoDims::new(2, self.height, self.width, 1)?;
        Ok(LocalForcePrompt::new_in(x, y, force.get(), angle.degrees(), &dims)?)
    }
}
