//! Dataset plans: one fully resolved scene per record, as JSON lines.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{make_text_prompt, sample_scene, AblationConfig, Scenario, SceneSpec, TextPrompt};
use crate::camera::CameraError;
use crate::physics::ChainState;
use crate::seed::derive_seed;
use crate::types::{Angle, ForcePrompt, GlobalForcePrompt, Magnitude, PromptError, VideoDims};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("record {index}: {source}")]
    Camera {
        index: u64,
        #[source]
        source: CameraError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub record_index: u64,
    pub seed: u64,
    pub dims: VideoDims,
    pub ablation: AblationConfig,
    pub spec: SceneSpec,
    /// The prompt in pixel coordinates of `dims`.
    pub force: ForcePrompt,
    pub prompt: TextPrompt,
}

impl PlanEntry {
    pub fn for_spec(record_index: u64, spec: SceneSpec, dims: VideoDims, ablation: AblationConfig) -> Result<Self, CameraError> {
        let force = force_prompt(&spec, &dims)?;
        let prompt = make_text_prompt(&spec, &ablation);
        Ok(Self {
            record_index,
            seed: spec.seed(),
            dims,
            ablation,
            spec,
            force,
            prompt,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.spec.scenario()
    }
}

/// Where the poke lands on the resting plant: the middle of segment
/// `contact`.
pub fn plant_contact_point(contact: usize) -> DVec3 {
    let stem = ChainState::plant(DVec3::ZERO, Angle::from_degrees(0.0).expect("zero is a valid angle"));
    DVec3::Z * ((contact as f64 + 0.5) * stem.segment_length)
}

fn ground_dir(degrees: f64) -> DVec3 {
    let r = degrees.to_radians();
    DVec3::new(r.cos(), r.sin(), 0.0)
}

/// Projects a scene's world-space force into a screen-space prompt.
pub fn force_prompt(spec: &SceneSpec, dims: &VideoDims) -> Result<ForcePrompt, CameraError> {
    let cam = spec.camera().camera(dims)?;
    let magnitude = |f: f64| Magnitude::new(f).map_err(CameraError::from);
    Ok(match spec {
        SceneSpec::Flag(s) => {
            let angle = cam.screen_angle(s.camera.target, ground_dir(s.wind_angle))?;
            ForcePrompt::Global(GlobalForcePrompt::new(s.wind_speed, angle.degrees()).map_err(CameraError::from)?)
        }
        SceneSpec::Ball(s) => {
            let at = s.balls.get(s.target).ok_or_else(|| {
                CameraError::Prompt(PromptError::Dims(format!("target {} of {} balls", s.target, s.balls.len())))
            })?;
            ForcePrompt::Local(cam.project_force(at.position, ground_dir(s.force_angle), magnitude(s.force_magnitude)?)?)
        }
        SceneSpec::Plant(s) => ForcePrompt::Local(cam.project_force(
            plant_contact_point(s.contact),
            ground_dir(s.force_angle),
            magnitude(s.force_magnitude)?,
        )?),
    })
}

/// Record `i` is sampled from `derive_seed(master_seed, i)` alone.
pub fn dataset_plan(
    scenario: Scenario,
    count: u64,
    master_seed: u64,
    ablation: &AblationConfig,
    dims: &VideoDims,
) -> Result<Vec<PlanEntry>, PlanError> {
    (0..count)
        .map(|index| {
            let spec = sample_scene(scenario, derive_seed(master_seed, index), ablation);
            PlanEntry::for_spec(index, spec, *dims, *ablation).map_err(|source| PlanError::Camera { index, source })
        })
        .collect()
}

pub fn write_plan(entries: &[PlanEntry], path: &Path) -> Result<(), PlanError> {
    let io = |source| PlanError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for e in entries {
        serde_json::to_writer(&mut out, e).map_err(|source| PlanError::Json {
            path: path.to_path_buf(),
            line: e.record_index as usize + 1,
            source,
        })?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_plan(path: &Path) -> Result<Vec<PlanEntry>, PlanError> {
    let io = |source| PlanError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| PlanError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}
