//! Randomized scene specifications for the three scenarios.
//!
//! Every sampler is a pure function of its seed. Camera and placement
//! ranges live in [`SceneConfig`]; the defaults are pinned.

mod plan;
mod prompt;

pub use plan::{dataset_plan, force_prompt, plant_contact_point, read_plan, write_plan, PlanEntry, PlanError};
pub use prompt::{contains_wind_keyword, make_text_prompt, TextPrompt};

use glam::DVec3;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraError, CameraModel};
use crate::physics::{BallMaterial, BallParams, ChainState};
use crate::render::palette::{self, BACKDROPS, BALL_COLORS, FLAG_COLORS, GROUND_TEXTURES};
use crate::seed::substream;
use crate::types::VideoDims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Flag,
    Ball,
    Plant,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Flag => "flag",
            Scenario::Ball => "ball",
            Scenario::Plant => "plant",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "flag" => Ok(Scenario::Flag),
            "ball" => Ok(Scenario::Ball),
            "plant" => Ok(Scenario::Plant),
            _ => Err(format!("unknown scenario {s:?} (expected flag, ball or plant)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub single_flag: bool,
    pub single_background: bool,
    pub no_distractors: bool,
    pub drop_wind_keywords: bool,
}

impl AblationConfig {
    /// Applies a CLI-style ablation name such as `no-distractors`.
    pub fn enable(&mut self, name: &str) -> Result<(), String> {
        match name {
            "single-flag" => self.single_flag = true,
            "single-background" => self.single_background = true,
            "no-distractors" => self.no_distractors = true,
            "drop-wind-keywords" => self.drop_wind_keywords = true,
            _ => return Err(format!("unknown ablation {name:?}")),
        }
        Ok(())
    }
}

/// An orbit camera around a look-at target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraDraw {
    pub target: DVec3,
    /// Degrees, from `+x` toward `+y`.
    pub azimuth: f64,
    /// Degrees above the ground plane.
    pub elevation: f64,
    pub distance: f64,
    pub vfov: f64,
}

impl CameraDraw {
    pub fn camera(&self, dims: &VideoDims) -> Result<CameraModel, CameraError> {
        CameraModel::orbit(self.target, self.azimuth, self.elevation, self.distance, self.vfov, dims)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..self.max)
        } else {
            self.min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRanges {
    pub elevation: Range,
    pub distance: Range,
    pub vfov: Range,
}

impl CameraRanges {
    fn sample(&self, rng: &mut impl Rng, target: DVec3, distance_scale: f64) -> CameraDraw {
        CameraDraw {
            target,
            azimuth: rng.random_range(0.0..360.0),
            elevation: self.elevation.sample(rng),
            distance: self.distance.sample(rng) * distance_scale,
            vfov: self.vfov.sample(rng),
        }
    }
}

/// Geometry and placement defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub flag_camera: CameraRanges,
    pub ball_camera: CameraRanges,
    pub plant_camera: CameraRanges,
    pub flag_length: f64,
    pub flag_height: f64,
    pub flag_grid: (usize, usize),
    pub pole_height: Range,
    /// Half side of the square the balls are placed in, meters.
    pub ball_area: f64,
    /// Extra clearance between balls, meters.
    pub ball_gap: f64,
    pub ground_extent: f64,
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            flag_camera: CameraRanges {
                elevation: Range::new(8.0, 25.0),
                // Multiplied by the flag-area size.
                distance: Range::new(2.2, 2.8),
                vfov: Range::new(40.0, 55.0),
            },
            ball_camera: CameraRanges {
                elevation: Range::new(35.0, 70.0),
                distance: Range::new(4.5, 6.5),
                vfov: Range::new(40.0, 50.0),
            },
            plant_camera: CameraRanges {
                elevation: Range::new(5.0, 30.0),
                distance: Range::new(1.6, 2.4),
                vfov: Range::new(35.0, 50.0),
            },
            flag_length: 0.8,
            flag_height: 0.5,
            flag_grid: (7, 10),
            pole_height: Range::new(1.1, 1.5),
            ball_area: 1.2,
            ball_gap: 0.1,
            ground_extent: 200.0,
            max_attempts: 1000,
        }
    }
}

impl SceneConfig {
    /// Pole-to-pole clearance that keeps flags streaming the same way apart.
    pub fn flag_spacing(&self) -> f64 {
        self.flag_length + 0.1
    }

    /// Half side of the square `count` flags are planted in.
    pub fn flag_area(&self, count: usize) -> f64 {
        0.6 * (count as f64).sqrt() * self.flag_spacing() + 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlagPlacement {
    /// Pole foot on the ground.
    pub base: DVec3,
    pub pole_height: f64,
    /// Ground direction the flag hangs toward before the wind starts.
    pub yaw: f64,
    pub color_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSceneSpec {
    pub seed: u64,
    pub flags: Vec<FlagPlacement>,
    pub camera: CameraDraw,
    pub backdrop_id: usize,
    pub ground_texture_id: usize,
    /// Degrees; the direction the wind blows toward.
    pub wind_angle: f64,
    pub wind_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPlacement {
    pub position: DVec3,
    pub material: BallMaterial,
    pub color_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSceneSpec {
    pub seed: u64,
    pub balls: Vec<BallPlacement>,
    pub camera: CameraDraw,
    pub ground_texture_id: usize,
    pub backdrop_id: usize,
    pub target: usize,
    /// Degrees, ground-plane push direction.
    pub force_angle: f64,
    pub force_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSceneSpec {
    pub seed: u64,
    pub camera: CameraDraw,
    pub backdrop_id: usize,
    pub ground_texture_id: usize,
    pub contact: usize,
    /// Degrees, ground-plane poke direction.
    pub force_angle: f64,
    pub force_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum SceneSpec {
    Flag(FlagSceneSpec),
    Ball(BallSceneSpec),
    Plant(PlantSceneSpec),
}

impl SceneSpec {
    pub fn scenario(&self) -> Scenario {
        match self {
            SceneSpec::Flag(_) => Scenario::Flag,
            SceneSpec::Ball(_) => Scenario::Ball,
            SceneSpec::Plant(_) => Scenario::Plant,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SceneSpec::Flag(s) => s.seed,
            SceneSpec::Ball(s) => s.seed,
            SceneSpec::Plant(s) => s.seed,
        }
    }

    pub fn camera(&self) -> &CameraDraw {
        match self {
            SceneSpec::Flag(s) => &s.camera,
            SceneSpec::Ball(s) => &s.camera,
            SceneSpec::Plant(s) => &s.camera,
        }
    }
}

const SALT_SCENE: u64 = 1;

fn backdrop_and_ground(rng: &mut impl RngCore, ablation: &AblationConfig) -> (usize, usize) {
    let b = rng.random_range(0..BACKDROPS);
    let g = rng.random_range(0..GROUND_TEXTURES);
    if ablation.single_background {
        (0, 0)
    } else {
        (b, g)
    }
}

/// Uniform points in `[-half, half]²` at least `gap` apart. Gives up on the
/// last point after `attempts` rejections and returns fewer.
fn scatter(rng: &mut impl Rng, count: usize, half: f64, gap: f64, attempts: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(count);
    'outer: while out.len() < count {
        for _ in 0..attempts {
            let p = (rng.random_range(-half..half), rng.random_range(-half..half));
            if out.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= gap) {
                out.push(p);
                continue 'outer;
            }
        }
        log::warn!("placed only {} of {count} objects after {attempts} attempts", out.len());
        break;
    }
    out
}

pub fn sample_flag_scene(seed: u64, ablation: &AblationConfig) -> FlagSceneSpec {
    sample_flag_scene_with(seed, ablation, &SceneConfig::default())
}

pub fn sample_flag_scene_with(seed: u64, ablation: &AblationConfig, cfg: &SceneConfig) -> FlagSceneSpec {
    let mut rng = substream(seed, SALT_SCENE);
    // Always draw, so overrides leave every other field's stream untouched.
    let drawn = rng.random_range(1..=64usize);
    let count = if ablation.single_flag { 1 } else { drawn };
    let (backdrop_id, ground_texture_id) = backdrop_and_ground(&mut rng, ablation);
    let wind_angle = rng.random_range(0.0..360.0);
    let wind_speed = rng.random::<f64>();
    let half = cfg.flag_area(count);
    let spots = scatter(&mut rng, count, half, cfg.flag_spacing(), cfg.max_attempts);
    let flags = spots
        .into_iter()
        .map(|(x, y)| FlagPlacement {
            base: DVec3::new(x, y, 0.0),
            pole_height: cfg.pole_height.sample(&mut rng),
            yaw: rng.random_range(0.0..360.0),
            color_id: rng.random_range(0..FLAG_COLORS),
        })
        .collect();
    let target = DVec3::new(0.0, 0.0, 0.5 * cfg.pole_height.max);
    let camera = cfg.flag_camera.sample(&mut rng, target, half);
    FlagSceneSpec {
        seed,
        flags,
        camera,
        backdrop_id,
        ground_texture_id,
        wind_angle,
        wind_speed,
    }
}

/// Margin, as a fraction of the frame, that ball centers keep from the
/// border in the initial frame.
const BALL_MARGIN: f64 = 0.08;

pub fn sample_ball_scene(seed: u64, ablation: &AblationConfig) -> BallSceneSpec {
    sample_ball_scene_with(seed, ablation, &SceneConfig::default())
}

pub fn sample_ball_scene_with(seed: u64, ablation: &AblationConfig, cfg: &SceneConfig) -> BallSceneSpec {
    let mut rng = substream(seed, SALT_SCENE);
    let drawn = rng.random_range(2..=4usize);
    let count = if ablation.no_distractors { 1 } else { drawn };
    let (backdrop_id, ground_texture_id) = backdrop_and_ground(&mut rng, ablation);
    let force_angle = rng.random_range(0.0..360.0);
    let force_magnitude = rng.random::<f64>();
    let radius = BallParams::default().radius;
    let spots = scatter(&mut rng, count, cfg.ball_area, 2.0 * radius + cfg.ball_gap, cfg.max_attempts);
    let target_color = rng.random_range(0..BALL_COLORS);
    let mut balls: Vec<BallPlacement> = spots
        .into_iter()
        .map(|(x, y)| BallPlacement {
            position: DVec3::new(x, y, radius),
            material: if rng.random_bool(2.0 / 3.0) { BallMaterial::Soccer } else { BallMaterial::Bowling },
            color_id: target_color,
        })
        .collect();
    let target = if ablation.no_distractors { 0 } else { rng.random_range(0..balls.len()) };
    for (i, b) in balls.iter_mut().enumerate() {
        if i != target {
            b.color_id = distractor_color(&mut rng, target_color);
        }
    }
    let dims = VideoDims::default();
    let mut camera = cfg.ball_camera.sample(&mut rng, DVec3::new(0.0, 0.0, radius), 1.0);
    for _ in 0..cfg.max_attempts {
        if balls_visible(&camera, &balls, &dims) {
            break;
        }
        camera = cfg.ball_camera.sample(&mut rng, DVec3::new(0.0, 0.0, radius), 1.0);
    }
    BallSceneSpec {
        seed,
        balls,
        camera,
        ground_texture_id,
        backdrop_id,
        target,
        force_angle,
        force_magnitude,
    }
}

/// Tolerance the tracker uses, per channel.
pub const SEGMENT_TOLERANCE: u8 = 60;

/// A color no shaded pixel of which can pass for the target.
fn distractor_color(rng: &mut impl Rng, target: usize) -> usize {
    let t = palette::ball_color(target);
    loop {
        let id = rng.random_range(0..BALL_COLORS);
        if palette::chebyshev(palette::ball_color(id), t) > 2 * SEGMENT_TOLERANCE {
            return id;
        }
    }
}

fn balls_visible(camera: &CameraDraw, balls: &[BallPlacement], dims: &VideoDims) -> bool {
    let Ok(cam) = camera.camera(dims) else { return false };
    let (w, h) = (dims.width() as f64, dims.height() as f64);
    balls.iter().all(|b| match cam.project_point(b.position) {
        Ok((x, y)) => x > BALL_MARGIN * w && x < (1.0 - BALL_MARGIN) * w && y > BALL_MARGIN * h && y < (1.0 - BALL_MARGIN) * h,
        Err(_) => false,
    })
}

pub fn sample_plant_scene(seed: u64, ablation: &AblationConfig) -> PlantSceneSpec {
    sample_plant_scene_with(seed, ablation, &SceneConfig::default())
}

pub fn sample_plant_scene_with(seed: u64, ablation: &AblationConfig, cfg: &SceneConfig) -> PlantSceneSpec {
    let mut rng = substream(seed, SALT_SCENE);
    let (backdrop_id, ground_texture_id) = backdrop_and_ground(&mut rng, ablation);
    let contact = rng.random_range(0..ChainState::DEFAULT_SEGMENTS);
    let force_angle = rng.random_range(0.0..360.0);
    let force_magnitude = rng.random::<f64>();
    let camera = cfg.plant_camera.sample(&mut rng, DVec3::new(0.0, 0.0, 0.3), 1.0);
    PlantSceneSpec {
        seed,
        camera,
        backdrop_id,
        ground_texture_id,
        contact,
        force_angle,
        force_magnitude,
    }
}

pub fn sample_scene(scenario: Scenario, seed: u64, ablation: &AblationConfig) -> SceneSpec {
    match scenario {
        Scenario::Flag => SceneSpec::Flag(sample_flag_scene(seed, ablation)),
        Scenario::Ball => SceneSpec::Ball(sample_ball_scene(seed, ablation)),
        Scenario::Plant => SceneSpec::Plant(sample_plant_scene(seed, ablation)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_spec() {
        let a = AblationConfig::default();
        assert_eq!(sample_flag_scene(5, &a), sample_flag_scene(5, &a));
        assert_eq!(sample_ball_scene(5, &a), sample_ball_scene(5, &a));
        assert_ne!(sample_ball_scene(5, &a), sample_ball_scene(6, &a));
    }

    #[test]
    fn flags_keep_their_distance() {
        let cfg = SceneConfig::default();
        for seed in 0..50 {
            let s = sample_flag_scene(seed, &AblationConfig::default());
            assert!(!s.flags.is_empty() && s.flags.len() <= 64);
            for (i, a) in s.flags.iter().enumerate() {
                for b in &s.flags[i + 1..] {
                    assert!(a.base.distance(b.base) >= cfg.flag_spacing());
                }
            }
        }
    }

    #[test]
    fn balls_do_not_overlap_and_start_in_frame() {
        let dims = VideoDims::default();
        for seed in 0..200 {
            let s = sample_ball_scene(seed, &AblationConfig::default());
            assert!(s.target < s.balls.len());
            for (i, a) in s.balls.iter().enumerate() {
                for b in &s.balls[i + 1..] {
                    assert!(a.position.distance(b.position) > 0.22);
                }
            }
            assert!(balls_visible(&s.camera, &s.balls, &dims), "seed {seed}");
        }
    }

    #[test]
    fn distractors_never_share_the_target_color() {
        for seed in 0..300 {
            let s = sample_ball_scene(seed, &AblationConfig::default());
            let t = palette::ball_color(s.balls[s.target].color_id);
            for (i, b) in s.balls.iter().enumerate() {
                if i != s.target {
                    assert!(palette::chebyshev(palette::ball_color(b.color_id), t) > 120);
                }
            }
        }
    }

    #[test]
    fn ablations_override_only_their_fields() {
        let base = AblationConfig::default();
        let single = AblationConfig { single_flag: true, ..base };
        let alone = AblationConfig { no_distractors: true, ..base };
        let plain = AblationConfig { single_background: true, ..base };
        for seed in 0..100 {
            let (f0, f1) = (sample_flag_scene(seed, &base), sample_flag_scene(seed, &single));
            assert_eq!(f1.flags.len(), 1);
            assert_eq!((f0.wind_angle, f0.wind_speed, f0.backdrop_id), (f1.wind_angle, f1.wind_speed, f1.backdrop_id));
            let (b0, b1) = (sample_ball_scene(seed, &base), sample_ball_scene(seed, &alone));
            assert_eq!((b1.balls.len(), b1.target), (1, 0));
            assert_eq!((b0.force_angle, b0.force_magnitude), (b1.force_angle, b1.force_magnitude));
            let p = sample_plant_scene(seed, &plain);
            assert_eq!((p.backdrop_id, p.ground_texture_id), (0, 0));
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [Scenario::Flag, Scenario::Ball, Scenario::Plant] {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("boat".parse::<Scenario>().is_err());
    }
}
