//! Color-segmentation tracking of a single object.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::RgbImage;
use crate::render::palette::{chebyshev, Rgb};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("target color never segmented in any frame")]
    TargetAbsent,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("{hints} ground-truth hints for {frames} frames")]
    HintCount { hints: usize, frames: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Segmentation,
    GroundTruthState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub frame: u32,
    /// Pixel `(col, row)`.
    pub center: (f64, f64),
    pub source: SampleSource,
    #[serde(default)]
    pub off_screen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Per-channel tolerance around the signature color.
    pub tolerance: u8,
    /// A component smaller than this fraction of the previous clean
    /// sighting counts as occluded.
    pub min_area_ratio: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { tolerance: 60, min_area_ratio: 0.7 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Component {
    area: usize,
    centroid: (f64, f64),
    touches_border: bool,
}

/// 4-connected components of pixels within `tolerance` of `signature`.
fn components(img: &RgbImage, signature: Rgb, tolerance: u8) -> Vec<Component> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mask: Vec<bool> = img.as_raw().chunks_exact(3).map(|p| chebyshev([p[0], p[1], p[2]], signature) <= tolerance).collect();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut sx, mut sy, mut border) = (0usize, 0.0, 0.0, false);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            sx += x as f64;
            sy += y as f64;
            border |= x == 0 || y == 0 || x == w - 1 || y == h - 1;
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        out.push(Component { area, centroid: (sx / area as f64, sy / area as f64), touches_border: border });
    }
    out
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Tracks the object whose pixels match `signature`.
///
/// `hints`, when given, are projected ground-truth centers, one per frame.
/// They pick the right component among several and replace the
/// segmentation on frames where the target is missing, clipped by the
/// border or shrunk by occlusion; such samples are labeled as ground
/// truth. Shrinkage is judged against the last segmented frame, so a ball
/// rolling away from the camera keeps being segmented. Without hints those
/// frames are skipped.
pub fn track_centroid(
    frames: &[RgbImage],
    signature: Rgb,
    hints: Option<&[(f64, f64)]>,
    options: &TrackOptions,
) -> Result<Vec<TrajectorySample>, TrackError> {
    if let Some(h) = hints {
        if h.len() != frames.len() {
            return Err(TrackError::HintCount { hints: h.len(), frames: frames.len() });
        }
    }
    let mut out = Vec::with_capacity(frames.len());
    let mut reference_area: Option<usize> = None;
    let mut previous: Option<(f64, f64)> = None;
    let mut segmented = false;
    for (f, img) in frames.iter().enumerate() {
        let hint = hints.map(|h| h[f]);
        let anchor = hint.or(previous);
        let comps = components(img, signature, options.tolerance);
        let best = match anchor {
            Some(a) => comps.iter().min_by(|x, y| dist2(x.centroid, a).total_cmp(&dist2(y.centroid, a))),
            None => comps.iter().max_by_key(|c| c.area),
        };
        let clean = best.filter(|c| {
            !c.touches_border && reference_area.map_or(true, |r| c.area as f64 >= options.min_area_ratio * r as f64)
        });
        let (w, h) = (img.width() as f64, img.height() as f64);
        match (clean, hint) {
            (Some(c), _) => {
                segmented = true;
                reference_area = Some(c.area);
                previous = Some(c.centroid);
                out.push(TrajectorySample { frame: f as u32, center: c.centroid, source: SampleSource::Segmentation, off_screen: false });
            }
            (None, Some(p)) => {
                let off_screen = !(p.0 >= 0.0 && p.1 >= 0.0 && p.0 <= w - 1.0 && p.1 <= h - 1.0);
                out.push(TrajectorySample { frame: f as u32, center: p, source: SampleSource::GroundTruthState, off_screen });
            }
            (None, None) => {}
        }
    }
    if !segmented {
        return Err(TrackError::TargetAbsent);
    }
    Ok(out)
}

/// Pixel distance between the first and last sample.
pub fn distance_traveled(traj: &[TrajectorySample]) -> Result<f64, TrackError> {
    match traj {
        [first, .., last] => Ok(dist2(first.center, last.center).sqrt()),
        _ => Err(TrackError::TooFewSamples(traj.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(w: u32, h: u32, c: (f64, f64), r: f64, rgb: Rgb) -> RgbImage {
        let mut img = RgbImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let inside = dist2((x as f64, y as f64), c) <= r * r;
                img.put_pixel(x, y, if inside { rgb } else { [90, 90, 90] });
            }
        }
        img
    }

    fn sample(frame: u32, x: f64, y: f64) -> TrajectorySample {
        TrajectorySample { frame, center: (x, y), source: SampleSource::Segmentation, off_screen: false }
    }

    #[test]
    fn three_four_five() {
        assert_eq!(distance_traveled(&[sample(0, 0.0, 0.0), sample(1, 3.0, 4.0)]).unwrap(), 5.0);
        assert_eq!(distance_traveled(&[sample(0, 2.0, 2.0), sample(9, 2.0, 2.0)]).unwrap(), 0.0);
        assert!(distance_traveled(&[sample(0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn distance_is_translation_and_rotation_invariant() {
        let pts = [(1.0, 2.0), (4.0, 7.5), (-3.0, 0.5)];
        let base = distance_traveled(&pts.map(|p| sample(0, p.0, p.1))).unwrap();
        let (s, c) = 0.7f64.sin_cos();
        let moved = pts.map(|p| sample(0, c * p.0 - s * p.1 + 11.0, s * p.0 + c * p.1 - 4.0));
        assert!((distance_traveled(&moved).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn static_disc_does_not_drift() {
        let frames = vec![disc(64, 48, (30.3, 20.6), 6.0, [200, 30, 30]); 5];
        let t = track_centroid(&frames, [200, 30, 30], None, &TrackOptions::default()).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|s| dist2(s.center, t[0].center) < 0.25));
        assert!((t[0].center.0 - 30.3).abs() < 0.5 && (t[0].center.1 - 20.6).abs() < 0.5);
    }

    #[test]
    fn picks_the_component_near_the_hint() {
        let mut img = disc(64, 48, (15.0, 20.0), 5.0, [200, 30, 30]);
        for y in 0..48 {
            for x in 0..64 {
                if dist2((x as f64, y as f64), (48.0, 24.0)) <= 49.0 {
                    img.put_pixel(x, y, [200, 30, 30]);
                }
            }
        }
        let t = track_centroid(&[img], [200, 30, 30], Some(&[(47.0, 25.0)]), &TrackOptions::default()).unwrap();
        assert!(dist2(t[0].center, (48.0, 24.0)) < 0.25);
    }

    #[test]
    fn occluded_frame_falls_back_to_ground_truth() {
        let mut frames = vec![disc(64, 48, (30.0, 20.0), 6.0, [200, 30, 30]); 3];
        frames[1] = disc(64, 48, (30.0, 20.0), 2.0, [200, 30, 30]);
        let hints = [(30.0, 20.0), (31.0, 20.0), (30.0, 20.0)];
        let t = track_centroid(&frames, [200, 30, 30], Some(&hints), &TrackOptions::default()).unwrap();
        assert_eq!(t[1].source, SampleSource::GroundTruthState);
        assert_eq!(t[1].center, (31.0, 20.0));
        assert_eq!(t[0].source, SampleSource::Segmentation);
    }

    #[test]
    fn absent_target_is_an_error() {
        let frames = vec![disc(32, 32, (10.0, 10.0), 4.0, [20, 200, 20]); 2];
        assert_eq!(track_centroid(&frames, [200, 30, 30], None, &TrackOptions::default()), Err(TrackError::TargetAbsent));
    }
}
