//! Force/mass study: how far soccer and bowling balls roll for a ladder of
//! push magnitudes, measured in the rendered clips.

use std::fmt::Write as _;

use glam::DVec3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::track::{distance_traveled, track_centroid, SampleSource, TrackError, TrackOptions};
use crate::par;
use crate::physics::{BallMaterial, BallParams};
use crate::pipeline::{realize_spec, RealizeError};
use crate::render::palette::ball_color;
use crate::scene::{BallPlacement, BallSceneSpec, CameraDraw, SceneSpec};
use crate::seed::{derive_seed, mix64, substream};
use crate::types::{Magnitude, PromptError, VideoDims};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("cell {id}: {source}")]
    Realize {
        id: String,
        #[source]
        source: RealizeError,
    },
    #[error("cell {id}: {source}")]
    Track {
        id: String,
        #[source]
        source: TrackError,
    },
    #[error("invalid study config: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassStudyConfig {
    pub master_seed: u64,
    pub forces: Vec<f64>,
    pub repeats: usize,
    /// Ground texture ids.
    pub surfaces: Vec<usize>,
    /// Ball color ids.
    pub colors: Vec<usize>,
    /// Render scale relative to the default 480×720 clip.
    pub scale: f64,
    pub track: TrackOptions,
}

impl Default for MassStudyConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            forces: (1..=8).map(|n| 0.125 * n as f64).collect(),
            repeats: 10,
            surfaces: vec![4, 20],
            colors: vec![0, 63],
            scale: 0.25,
            track: TrackOptions::default(),
        }
    }
}

/// Where the ball starts; pushes point roughly along `+x`.
const START: (f64, f64) = (-2.0, 0.0);
const ANGLE_JITTER: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub id: String,
    pub material: BallMaterial,
    pub force: f64,
    pub surface: usize,
    pub color: usize,
    pub repeat: usize,
    /// Segmentation-based pixel distance.
    pub distance_px: f64,
    /// Projected ground-truth pixel distance.
    pub gt_distance_px: f64,
    /// Frames where the tracker used ground truth.
    pub fallback_frames: usize,
    /// Simulated rolling distance, meters.
    pub world_distance: f64,
    /// Closed-form `v0² / (2a)`, meters.
    pub oracle_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub force: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub mean_gt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceDistanceCurve {
    pub material: BallMaterial,
    pub points: Vec<CurvePoint>,
    pub fit: LinearFit,
}

impl ForceDistanceCurve {
    pub fn strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].mean > w[0].mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassStudyReport {
    pub config: MassStudyConfig,
    pub soccer: ForceDistanceCurve,
    pub bowling: ForceDistanceCurve,
    /// Soccer mean above bowling mean at every force.
    pub ordering_pass: bool,
    /// The same, within every surface and color combination.
    pub ordering_by_group_pass: bool,
    pub oracle_max_rel_error: f64,
    pub cells: Vec<CellResult>,
}

impl MassStudyReport {
    pub fn monotone_pass(&self) -> bool {
        self.soccer.strictly_increasing() && self.bowling.strictly_increasing()
    }

    /// `material,F,mean,std,n`
    pub fn csv(&self) -> String {
        let mut s = String::from("material,F,mean,std,n\n");
        for c in [&self.soccer, &self.bowling] {
            for p in &c.points {
                let _ = writeln!(s, "{},{},{},{},{}", c.material.name(), p.force, p.mean, p.std, p.n);
            }
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>6} {:>14} {:>14} {:>14} {:>14}", "F", "soccer px", "bowling px", "soccer gt", "bowling gt");
        for (a, b) in self.soccer.points.iter().zip(&self.bowling.points) {
            let _ = writeln!(
                s,
                "{:>6.3} {:>8.2} ±{:<5.2} {:>8.2} ±{:<5.2} {:>14.2} {:>14.2}",
                a.force, a.mean, a.std, b.mean, b.std, a.mean_gt, b.mean_gt
            );
        }
        let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "ordering soccer > bowling: {}", verdict(self.ordering_pass));
        let _ = writeln!(s, "ordering within every surface/color group: {}", verdict(self.ordering_by_group_pass));
        let _ = writeln!(s, "distance increases with F: {}", verdict(self.monotone_pass()));
        s
    }
}

struct Cell {
    material: BallMaterial,
    force: f64,
    surface: usize,
    color: usize,
    repeat: usize,
}

impl Cell {
    fn id(&self) -> String {
        format!("{}-F{:.3}-s{}-c{}-r{}", self.material.name(), self.force, self.surface, self.color, self.repeat)
    }

    /// Camera and push direction depend only on surface, color and repeat,
    /// so every material and force sees the same setup.
    fn setup_seed(&self, master: u64) -> u64 {
        derive_seed(master, mix64((self.surface as u64) << 40 ^ (self.color as u64) << 20 ^ self.repeat as u64))
    }
}

fn cell_spec(cell: &Cell, master: u64) -> BallSceneSpec {
    let seed = cell.setup_seed(master);
    let mut rng = substream(seed, 0x5AD1);
    let radius = BallParams::default().radius;
    let camera = CameraDraw {
        target: DVec3::new(0.0, 0.0, radius),
        azimuth: 270.0 + rng.random_range(-6.0..6.0),
        elevation: rng.random_range(50.0..60.0),
        distance: rng.random_range(5.4..5.9),
        vfov: 35.0,
    };
    let angle = rng.random_range(-ANGLE_JITTER..ANGLE_JITTER).rem_euclid(360.0);
    BallSceneSpec {
        seed,
        balls: vec![BallPlacement { position: DVec3::new(START.0, START.1, radius), material: cell.material, color_id: cell.color }],
        camera,
        ground_texture_id: cell.surface,
        backdrop_id: 0,
        target: 0,
        force_angle: angle,
        force_magnitude: cell.force,
    }
}

fn run_cell(cell: &Cell, config: &MassStudyConfig, dims: &VideoDims) -> Result<CellResult, StudyError> {
    let id = cell.id();
    let spec = cell_spec(cell, config.master_seed);
    let realized = realize_spec(&SceneSpec::Ball(spec), dims).map_err(|source| StudyError::Realize { id: id.clone(), source })?;
    let hints: Vec<(f64, f64)> = realized
        .states
        .iter()
        .map(|s| realized.camera.project_point(s.balls[0].position))
        .collect::<Result<_, _>>()
        .map_err(|e| StudyError::Realize { id: id.clone(), source: e.into() })?;
    let track = |source| StudyError::Track { id: id.clone(), source };
    let traj = track_centroid(&realized.frames, ball_color(cell.color), Some(&hints), &config.track).map_err(track)?;
    let distance_px = distance_traveled(&traj).map_err(track)?;
    let (first, last) = (hints[0], hints[hints.len() - 1]);
    let gt_distance_px = ((last.0 - first.0).powi(2) + (last.1 - first.1).powi(2)).sqrt();
    let p0 = realized.states[0].balls[0].position;
    let p1 = realized.states.last().expect("clips have frames").balls[0].position;
    let params = BallParams::default();
    Ok(CellResult {
        id: id.clone(),
        material: cell.material,
        force: cell.force,
        surface: cell.surface,
        color: cell.color,
        repeat: cell.repeat,
        distance_px,
        gt_distance_px,
        fallback_frames: traj.iter().filter(|s| s.source == SampleSource::GroundTruthState).count(),
        world_distance: (p1 - p0).truncate().length(),
        oracle_distance: params.stopping_distance(cell.material, Magnitude::new(cell.force)?),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LinearFit { slope, intercept: my - slope * mx, r2 }
}

fn curve(material: BallMaterial, forces: &[f64], cells: &[CellResult]) -> ForceDistanceCurve {
    let mine: Vec<&CellResult> = cells.iter().filter(|c| c.material == material).collect();
    let points = forces
        .iter()
        .map(|&f| {
            let d: Vec<f64> = mine.iter().filter(|c| c.force == f).map(|c| c.distance_px).collect();
            let gt: Vec<f64> = mine.iter().filter(|c| c.force == f).map(|c| c.gt_distance_px).collect();
            let (mean, std) = mean_std(&d);
            CurvePoint { force: f, mean, std, n: d.len(), mean_gt: mean_std(&gt).0 }
        })
        .collect();
    let xs: Vec<f64> = mine.iter().map(|c| c.force).collect();
    let ys: Vec<f64> = mine.iter().map(|c| c.distance_px).collect();
    ForceDistanceCurve { material, points, fit: linear_fit(&xs, &ys) }
}

pub fn mass_study(config: &MassStudyConfig) -> Result<MassStudyReport, StudyError> {
    if config.forces.is_empty() || config.repeats == 0 || config.surfaces.is_empty() || config.colors.is_empty() {
        return Err(StudyError::Config("forces, repeats, surfaces and colors must be non-empty".into()));
    }
    let mut forces = config.forces.clone();
    forces.sort_by(f64::total_cmp);
    forces.dedup();
    for &f in &forces {
        Magnitude::new(f)?;
    }
    let dims = VideoDims::default().scaled(config.scale)?;
    let mut cells = Vec::new();
    for material in [BallMaterial::Soccer, BallMaterial::Bowling] {
        for &force in &forces {
            for &surface in &config.surfaces {
                for &color in &config.colors {
                    for repeat in 0..config.repeats {
                        cells.push(Cell { material, force, surface, color, repeat });
                    }
                }
            }
        }
    }
    let results = par::map_slice(&cells, |c| run_cell(c, config, &dims)).into_iter().collect::<Result<Vec<_>, _>>()?;

    let soccer = curve(BallMaterial::Soccer, &forces, &results);
    let bowling = curve(BallMaterial::Bowling, &forces, &results);
    let ordering_pass = soccer.points.iter().zip(&bowling.points).all(|(s, b)| s.mean > b.mean);
    let group_mean = |m: BallMaterial, f: f64, s: usize, c: usize| {
        let d: Vec<f64> = results
            .iter()
            .filter(|r| r.material == m && r.force == f && r.surface == s && r.color == c)
            .map(|r| r.distance_px)
            .collect();
        mean_std(&d).0
    };
    let ordering_by_group_pass = forces.iter().all(|&f| {
        config.surfaces.iter().all(|&s| {
            config.colors.iter().all(|&c| group_mean(BallMaterial::Soccer, f, s, c) > group_mean(BallMaterial::Bowling, f, s, c))
        })
    });
    let oracle_max_rel_error = results
        .iter()
        .map(|r| (r.world_distance - r.oracle_distance).abs() / r.oracle_distance)
        .fold(0.0, f64::max);
    Ok(MassStudyReport {
        config: MassStudyConfig { forces, ..config.clone() },
        soccer,
        bowling,
        ordering_pass,
        ordering_by_group_pass,
        oracle_max_rel_error,
        cells: results,
    })
}
