//! Control-signal tensors for force prompts.
//!
//! A global (wind) prompt becomes three constant channels:
//! `−1 + 2F`, `cos θ`, `sin θ`. A local (poke) prompt becomes a video of a
//! Gaussian blob that starts at the poked pixel and travels along `θ` at
//! constant velocity, covering `(1/8 + 3/8·F)·w` pixels by the last frame.

mod export;

pub use export::{frame_images, read_fpct, write_fpct, write_png_frames, FPCT_MAGIC};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::types::{
    ForcePrompt, GlobalForcePrompt, LocalForcePrompt, Magnitude, MultiForcePrompt, PromptError, VideoDims,
};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("invalid blob parameters: {0}")]
    Blob(String),
    #[error("tensor file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which encoder produced a tensor; decides the 8-bit export mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Values in `[−1, 1]`.
    Global,
    /// Values in `[0, 1]`, identical across channels.
    Local,
}

/// Dense `frames × channels × height × width` tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTensor {
    dims: VideoDims,
    encoding: Encoding,
    values: Vec<f32>,
}

impl ControlTensor {
    pub(crate) fn from_parts(dims: VideoDims, encoding: Encoding, values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), Self::len_for(&dims));
        Self {
            dims,
            encoding,
            values,
        }
    }

    fn len_for(dims: &VideoDims) -> usize {
        dims.frames() as usize * dims.channels() as usize * dims.pixels_per_frame()
    }

    pub fn dims(&self) -> &VideoDims {
        &self.dims
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// One `height × width` plane.
    pub fn plane(&self, frame: usize, channel: usize) -> &[f32] {
        let hw = self.dims.pixels_per_frame();
        let start = (frame * self.dims.channels() as usize + channel) * hw;
        &self.values[start..start + hw]
    }

    pub fn get(&self, frame: usize, channel: usize, row: usize, col: usize) -> f32 {
        self.plane(frame, channel)[row * self.dims.width() as usize + col]
    }

    /// `(column, row)` of the largest value in a plane; first in raster
    /// order on ties.
    pub fn argmax(&self, frame: usize, channel: usize) -> (usize, usize) {
        let w = self.dims.width() as usize;
        let (idx, _) = self.plane(frame, channel).iter().enumerate().fold(
            (0usize, f32::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
        (idx % w, idx / w)
    }

    /// Intensity-weighted centroid `(x, y)` of a plane, or `None` if it is
    /// all zero.
    pub fn centroid(&self, frame: usize, channel: usize) -> Option<(f64, f64)> {
        let w = self.dims.width() as usize;
        let (mut sum, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64);
        for (i, &v) in self.plane(frame, channel).iter().enumerate() {
            if v != 0.0 {
                let v = v as f64;
                sum += v;
                sx += v * (i % w) as f64;
                sy += v * (i / w) as f64;
            }
        }
        (sum > 0.0).then(|| (sx / sum, sy / sum))
    }

    pub fn plane_sum(&self, frame: usize, channel: usize) -> f64 {
        self.plane(frame, channel).iter().map(|&v| v as f64).sum()
    }

    /// Largest absolute elementwise difference; infinite if shapes differ.
    pub fn max_abs_diff(&self, other: &ControlTensor) -> f64 {
        if self.dims != other.dims || self.values.len() != other.values.len() {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a as f64 - *b as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Shape of the moving blob in local encodings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobParams {
    /// Nominal blob radius in pixels.
    pub radius: f64,
    /// Gaussian falloff standard deviation in pixels.
    pub sigma: f64,
    /// Intensity is exactly zero beyond this distance from the center.
    pub truncation: f64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            radius: 20.0,
            sigma: 10.0,
            truncation: 30.0,
        }
    }
}

impl BlobParams {
    pub fn new(radius: f64, sigma: f64, truncation: f64) -> Result<Self, EncodeError> {
        let p = Self {
            radius,
            sigma,
            truncation,
        };
        p.validate()?;
        Ok(p)
    }

    /// Scales every length, e.g. for downsampled previews.
    pub fn scaled(&self, scale: f64) -> Result<Self, EncodeError> {
        Self::new(self.radius * scale, self.sigma * scale, self.truncation * scale)
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        let finite = self.radius.is_finite() && self.sigma.is_finite() && self.truncation.is_finite();
        if !finite || self.radius <= 0.0 || self.sigma <= 0.0 {
            return Err(EncodeError::Blob(format!("{self:?}")));
        }
        if self.truncation < self.radius {
            return Err(EncodeError::Blob(format!(
                "truncation {} below radius {}",
                self.truncation, self.radius
            )));
        }
        Ok(())
    }

    /// Intensity at squared distance `d2` from the blob center.
    pub fn intensity(&self, d2: f64) -> f64 {
        if d2 > self.truncation * self.truncation {
            0.0
        } else {
            (-d2 / (2.0 * self.sigma * self.sigma)).exp().min(1.0)
        }
    }
}

/// Fills every voxel of the three channels with `−1 + 2F`, `cos θ`, `sin θ`.
pub fn encode_global(prompt: &GlobalForcePrompt, dims: &VideoDims) -> Result<ControlTensor, EncodeError> {
    if dims.channels() != 3 {
        return Err(PromptError::Dims(format!("channels = {}", dims.channels())).into());
    }
    let channel_values = global_channels(prompt);
    let hw = dims.pixels_per_frame();
    let mut values = vec![0.0f32; ControlTensor::len_for(dims)];
    par::for_each_chunk_mut(&mut values, hw, |plane_index, plane| {
        plane.fill(channel_values[plane_index % 3]);
    });
    Ok(ControlTensor::from_parts(*dims, Encoding::Global, values))
}

/// The three constant channel values of a global encoding.
pub fn global_channels(prompt: &GlobalForcePrompt) -> [f32; 3] {
    let theta = prompt.angle.radians();
    [
        (-1.0 + 2.0 * prompt.force.get()) as f32,
        theta.cos() as f32,
        theta.sin() as f32,
    ]
}

/// Total pixel distance the blob covers from first to last frame.
pub fn blob_displacement(force: Magnitude, dims: &VideoDims) -> f64 {
    (0.125 + 0.375 * force.get()) * dims.width() as f64
}

/// Blob center `(x, y)` in frame `frame` (0-based).
pub fn blob_center(prompt: &LocalForcePrompt, dims: &VideoDims, frame: u32) -> (f64, f64) {
    let t = frame as f64 / (dims.frames() - 1) as f64;
    let d = t * blob_displacement(prompt.force, dims);
    let (sx, sy) = prompt.angle.screen_step();
    (prompt.x() + d * sx, prompt.y() + d * sy)
}

/// Global prompts ignore `blob`.
pub fn encode_prompt(prompt: &ForcePrompt, dims: &VideoDims, blob: &BlobParams) -> Result<ControlTensor, EncodeError> {
    match prompt {
        ForcePrompt::Global(g) => encode_global(g, dims),
        ForcePrompt::Local(l) => encode_local(l, dims, blob),
    }
}

pub fn encode_local(
    prompt: &LocalForcePrompt,
    dims: &VideoDims,
    blob: &BlobParams,
) -> Result<ControlTensor, EncodeError> {
    encode_blobs(std::slice::from_ref(prompt), dims, blob)
}

/// Several blobs combined by pointwise maximum.
pub fn encode_multi(
    prompt: &MultiForcePrompt,
    dims: &VideoDims,
    blob: &BlobParams,
) -> Result<ControlTensor, EncodeError> {
    encode_blobs(prompt.forces(), dims, blob)
}

fn encode_blobs(
    forces: &[LocalForcePrompt],
    dims: &VideoDims,
    blob: &BlobParams,
) -> Result<ControlTensor, EncodeError> {
    if forces.is_empty() {
        return Err(PromptError::EmptyMulti.into());
    }
    blob.validate()?;
    for f in forces {
        f.check_in(dims)?;
    }
    let hw = dims.pixels_per_frame();
    let channels = dims.channels() as usize;
    let mut values = vec![0.0f32; ControlTensor::len_for(dims)];
    par::for_each_chunk_mut(&mut values, hw * channels, |frame, chunk| {
        let (first, rest) = chunk.split_at_mut(hw);
        for f in forces {
            let center = blob_center(f, dims, frame as u32);
            splat_max(first, dims, center, blob);
        }
        for plane in rest.chunks_mut(hw) {
            plane.copy_from_slice(first);
        }
    });
    Ok(ControlTensor::from_parts(*dims, Encoding::Local, values))
}

/// Writes `max(existing, blob)` over the blob's support, clipped to the frame.
fn splat_max(plane: &mut [f32], dims: &VideoDims, (cx, cy): (f64, f64), blob: &BlobParams) {
    let (w, h) = (dims.width() as i64, dims.height() as i64);
    let r = blob.truncation;
    let c0 = ((cx - r).ceil() as i64).max(0);
    let c1 = ((cx + r).floor() as i64).min(w - 1);
    let r0 = ((cy - r).ceil() as i64).max(0);
    let r1 = ((cy + r).floor() as i64).min(h - 1);
    if c0 > c1 || r0 > r1 {
        return;
    }
    for row in r0..=r1 {
        let dy = row as f64 - cy;
        let line = &mut plane[(row * w) as usize..((row + 1) * w) as usize];
        for col in c0..=c1 {
            let dx = col as f64 - cx;
            let v = blob.intensity(dx * dx + dy * dy) as f32;
            let cell = &mut line[col as usize];
            if v > *cell {
                *cell = v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Angle;
    use proptest::prelude::*;

    fn small_dims() -> VideoDims {
        VideoDims::new(9, 48, 72, 8).unwrap()
    }

    #[test]
    fn global_midpoint_upward() {
        let t = encode_global(&GlobalForcePrompt::new(0.5, 90.0).unwrap(), &small_dims()).unwrap();
        for f in 0..9 {
            assert!(t.plane(f, 0).iter().all(|&v| v == 0.0));
            assert!(t.plane(f, 1).iter().all(|&v| v.abs() < 1e-7));
            assert!(t.plane(f, 2).iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn global_endpoints() {
        let dims = small_dims();
        let t = encode_global(&GlobalForcePrompt::new(0.0, 0.0).unwrap(), &dims).unwrap();
        assert_eq!((t.get(3, 0, 5, 5), t.get(3, 1, 5, 5), t.get(3, 2, 5, 5)), (-1.0, 1.0, 0.0));
        let t = encode_global(&GlobalForcePrompt::new(1.0, 180.0).unwrap(), &dims).unwrap();
        assert_eq!(t.get(8, 0, 47, 71), 1.0);
        assert_eq!(t.get(8, 1, 47, 71), -1.0);
        assert!(t.get(8, 2, 47, 71).abs() < 1e-7);
    }

    #[test]
    fn global_wraps_around_the_circle() {
        let a = global_channels(&GlobalForcePrompt::new(0.3, 359.999_999).unwrap());
        let b = global_channels(&GlobalForcePrompt::new(0.3, 0.0).unwrap());
        assert!((a[1] - b[1]).abs() < 1e-6 && (a[2] - b[2]).abs() < 1e-6);
    }

    #[test]
    fn displacement_values() {
        let dims = VideoDims::default();
        let d = |f: f64| blob_displacement(Magnitude::new(f).unwrap(), &dims);
        assert_eq!(d(0.0), 90.0);
        assert_eq!(d(1.0), 360.0);
        assert_eq!(d(0.5), 225.0);
    }

    #[test]
    fn final_centers() {
        let dims = VideoDims::default();
        let p = LocalForcePrompt::new(100.0, 200.0, 1.0, 0.0).unwrap();
        assert_eq!(blob_center(&p, &dims, 48), (460.0, 200.0));
        let p = LocalForcePrompt::new(100.0, 200.0, 0.0, 90.0).unwrap();
        let (x, y) = blob_center(&p, &dims, 48);
        assert!((x - 100.0).abs() < 1e-12);
        assert_eq!(y, 110.0);
    }

    #[test]
    fn local_frame_zero_peaks_at_the_poke() {
        let dims = small_dims();
        let p = LocalForcePrompt::new(30.3, 20.6, 0.4, 33.0).unwrap();
        let t = encode_local(&p, &dims, &BlobParams::default().scaled(0.25).unwrap()).unwrap();
        assert_eq!(t.argmax(0, 0), (30, 21));
        assert!(t.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        for c in 1..3 {
            assert_eq!(t.plane(4, 0), t.plane(4, c));
        }
    }

    #[test]
    fn blob_may_leave_the_frame() {
        let dims = small_dims();
        let p = LocalForcePrompt::new(70.0, 10.0, 1.0, 0.0).unwrap();
        let t = encode_local(&p, &dims, &BlobParams::default().scaled(0.25).unwrap()).unwrap();
        assert_eq!(t.plane_sum(8, 0), 0.0);
    }

    #[test]
    fn out_of_frame_poke_rejected() {
        let p = LocalForcePrompt::new(100.0, 10.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            encode_local(&p, &small_dims(), &BlobParams::default()),
            Err(EncodeError::Prompt(PromptError::OutOfFrame { .. }))
        ));
    }

    #[test]
    fn blob_params_validation() {
        assert!(BlobParams::new(20.0, 10.0, 19.0).is_err());
        assert!(BlobParams::new(0.0, 10.0, 30.0).is_err());
        assert!(BlobParams::new(20.0, 10.0, 30.0).is_ok());
    }

    #[test]
    fn multi_singleton_is_bit_identical() {
        let dims = small_dims();
        let blob = BlobParams::default().scaled(0.25).unwrap();
        let p = LocalForcePrompt::new(12.0, 30.0, 0.7, 200.0).unwrap();
        let single = encode_local(&p, &dims, &blob).unwrap();
        let multi = encode_multi(&MultiForcePrompt::new(vec![p]).unwrap(), &dims, &blob).unwrap();
        assert_eq!(single, multi);
        let twice = encode_multi(&MultiForcePrompt::new(vec![p, p]).unwrap(), &dims, &blob).unwrap();
        assert_eq!(single, twice);
    }

    #[test]
    fn far_blobs_match_their_single_encodings() {
        let dims = VideoDims::new(5, 120, 400, 8).unwrap();
        let blob = BlobParams::default();
        let a = LocalForcePrompt::new(40.0, 30.0, 0.0, 270.0).unwrap();
        let b = LocalForcePrompt::new(300.0, 30.0, 0.0, 270.0).unwrap();
        let ta = encode_local(&a, &dims, &blob).unwrap();
        let tb = encode_local(&b, &dims, &blob).unwrap();
        let both = encode_multi(&MultiForcePrompt::new(vec![a, b]).unwrap(), &dims, &blob).unwrap();
        // Supports are disjoint, so the max equals the sum of the singles.
        for ((m, x), y) in both.values().iter().zip(ta.values()).zip(tb.values()) {
            assert!(*x == 0.0 || *y == 0.0);
            assert_eq!(*m, x + y);
        }
    }

    proptest! {
        #[test]
        fn displacement_is_affine_in_force(f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
            let dims = VideoDims::default();
            let d1 = blob_displacement(Magnitude::new(f1).unwrap(), &dims);
            let d2 = blob_displacement(Magnitude::new(f2).unwrap(), &dims);
            prop_assert!((d2 - d1 - 720.0 * 0.375 * (f2 - f1)).abs() < 1e-9);
            if f1 < f2 { prop_assert!(d1 < d2); }
        }

        #[test]
        fn global_channel_zero_has_slope_two(f1 in 0.0f64..1.0, f2 in 0.0f64..1.0, t in 0.0f64..360.0) {
            let a = global_channels(&GlobalForcePrompt::new(f1, t).unwrap());
            let b = global_channels(&GlobalForcePrompt::new(f2, t).unwrap());
            prop_assert!(((a[0] - b[0]) as f64).abs() <= 2.0 * (f1 - f2).abs() + 1e-6);
            prop_assert!(((a[1] * a[1] + a[2] * a[2]) as f64 - 1.0).abs() < 1e-6);
        }

        #[test]
        fn blob_mass_is_conserved_while_inside(f in 0.0f64..1.0, t in 0.0f64..360.0) {
            let dims = VideoDims::new(5, 400, 400, 8).unwrap();
            let p = LocalForcePrompt::new(200.0, 200.0, f, t).unwrap();
            let blob = BlobParams::default();
            let tensor = encode_local(&p, &dims, &blob).unwrap();
            let s0 = tensor.plane_sum(0, 0);
            for fr in 1..5 {
                let (cx, cy) = blob_center(&p, &dims, fr as u32);
                let inside = cx > 31.0 && cx < 368.0 && cy > 31.0 && cy < 368.0;
                if inside {
                    // Sub-pixel shifts move samples across the truncation circle.
                    let s = tensor.plane_sum(fr, 0);
                    prop_assert!((s - s0).abs() / s0 < 1e-3, "frame {} sum {} vs {}", fr, s, s0);
                }
            }
        }

        #[test]
        fn mirrored_angle_mirrors_center(f in 0.0f64..1.0, t in 0.0f64..360.0) {
            let dims = VideoDims::default();
            let p = LocalForcePrompt::new(360.0, 240.0, f, t).unwrap();
            let m = LocalForcePrompt::new(360.0, 240.0, f, Angle::from_degrees(t).unwrap().mirrored_horizontally().degrees()).unwrap();
            let (x1, y1) = blob_center(&p, &dims, 48);
            let (x2, y2) = blob_center(&m, &dims, 48);
            prop_assert!(((x1 - 360.0) + (x2 - 360.0)).abs() < 1e-9);
            prop_assert!((y1 - y2).abs() < 1e-9);
        }
    }
}
