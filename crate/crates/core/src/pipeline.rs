//! Turns a plan entry into simulated states and rendered frames.

use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraModel};
use crate::image::RgbImage;
use crate::par;
use crate::physics::cloth::ClothTopology;
use crate::physics::{
    simulate_ball, simulate_chain, simulate_cloth, BallParams, BallState, ChainParams, ChainState, ClothParams,
    ClothState, Gust, Poke, Push, SimClock, SimError, WindField,
};
use crate::render::palette::{ball_color, flag_color};
use crate::render::{render_clip, FrameState, Ground, RenderError, Renderable, SceneGeometry};
use crate::scene::{BallSceneSpec, FlagSceneSpec, PlanEntry, PlantSceneSpec, SceneConfig, SceneSpec};
use crate::seed::mix64;
use crate::types::{Angle, Magnitude, PromptError, VideoDims};

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// One line of `states.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub frame: u32,
    pub object: usize,
    pub kind: ObjectKind,
    /// Ball center, flag fly-edge centroid or plant tip.
    pub position: DVec3,
    /// Flag fly edge or plant joints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<DVec3>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Ball,
    Flag,
    Plant,
}

/// A simulated and rendered record, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct Realized {
    pub camera: CameraModel,
    pub geometry: SceneGeometry,
    pub states: Vec<FrameState>,
    pub frames: Vec<RgbImage>,
}

impl Realized {
    pub fn object_states(&self) -> Vec<ObjectState> {
        object_states(&self.states)
    }
}

pub fn object_states(states: &[FrameState]) -> Vec<ObjectState> {
    let mut out = Vec::new();
    for (f, s) in states.iter().enumerate() {
        let frame = f as u32;
        for (i, b) in s.balls.iter().enumerate() {
            out.push(ObjectState { frame, object: i, kind: ObjectKind::Ball, position: b.position, points: None });
        }
        for (i, c) in s.flags.iter().enumerate() {
            out.push(ObjectState {
                frame,
                object: i,
                kind: ObjectKind::Flag,
                position: c.free_edge_centroid(),
                points: Some(c.free_edge().collect()),
            });
        }
        if let Some(c) = &s.chain {
            out.push(ObjectState { frame, object: 0, kind: ObjectKind::Plant, position: c.tip(), points: Some(c.joints()) });
        }
    }
    out
}

const STEM: [u8; 3] = [46, 150, 52];
const BLOOM: [u8; 3] = [236, 72, 128];
const POLE: [u8; 3] = [190, 190, 196];
const POLE_RADIUS: f64 = 0.015;

/// Simulates and renders a plan entry at its own dims.
pub fn realize(entry: &PlanEntry) -> Result<Realized, RealizeError> {
    realize_spec(&entry.spec, &entry.dims)
}

pub fn realize_spec(spec: &SceneSpec, dims: &VideoDims) -> Result<Realized, RealizeError> {
    let (states, geometry) = simulate_spec(spec, dims)?;
    let camera = spec.camera().camera(dims)?;
    let frames = render_clip(&geometry, &states, &camera, dims)?;
    Ok(Realized { camera, geometry, states, frames })
}

/// Simulation only: per-frame states plus what to draw.
pub fn simulate_spec(spec: &SceneSpec, dims: &VideoDims) -> Result<(Vec<FrameState>, SceneGeometry), RealizeError> {
    match spec {
        SceneSpec::Flag(s) => simulate_flags(s, dims),
        SceneSpec::Ball(s) => simulate_balls(s, dims),
        SceneSpec::Plant(s) => simulate_plant(s, dims),
    }
}

fn ground(texture: usize) -> Option<Ground> {
    Some(Ground { texture, extent: SceneConfig::default().ground_extent })
}

/// A flag settled under gravity, hanging from a pole top at the origin
/// toward `+x`.
fn settled_template(cfg: &SceneConfig, params: &ClothParams, dt: f64) -> Result<ClothState, SimError> {
    let (rows, cols) = cfg.flag_grid;
    let mut flag = ClothState::flag(DVec3::ZERO, Angle::from_degrees(0.0).expect("valid"), cfg.flag_length, cfg.flag_height, rows, cols);
    flag.settle(params, 3.0, dt)?;
    Ok(flag)
}

fn placed(template: &ClothState, topology: &Arc<ClothTopology>, top: DVec3, yaw: f64) -> ClothState {
    let (s, c) = yaw.to_radians().sin_cos();
    let positions = template
        .positions
        .iter()
        .map(|p| top + DVec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z))
        .collect();
    ClothState { topology: Arc::clone(topology), positions, velocities: template.velocities.clone() }
}

fn simulate_flags(s: &FlagSceneSpec, dims: &VideoDims) -> Result<(Vec<FrameState>, SceneGeometry), RealizeError> {
    let cfg = SceneConfig::default();
    let params = ClothParams::default();
    let clock = SimClock::with_substeps(dims, ClothParams::SUBSTEPS);
    let template = settled_template(&cfg, &params, clock.dt())?;
    let topology = Arc::clone(&template.topology);
    let runs: Vec<Result<Vec<ClothState>, SimError>> = par::map_indices(s.flags.len(), |i| {
        let f = &s.flags[i];
        let top = f.base + DVec3::Z * f.pole_height;
        let wind = WindField {
            speed: Magnitude::new(s.wind_speed).map_err(|e| SimError::InvalidInitial(e.to_string()))?,
            angle: Angle::from_degrees(s.wind_angle).map_err(|e| SimError::InvalidInitial(e.to_string()))?,
            gust: Gust::Smoothed { amplitude: 0.2, correlation_time: 0.6, seed: mix64(s.seed ^ i as u64) },
        };
        simulate_cloth(&placed(&template, &topology, top, f.yaw), &wind, &params, &clock)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let states = (0..clock.frames() as usize)
        .map(|t| FrameState { flags: runs.iter().map(|r| r[t].clone()).collect(), ..Default::default() })
        .collect();
    let mut renderables = Vec::with_capacity(2 * s.flags.len());
    for f in &s.flags {
        renderables.push(Renderable::Pole {
            base: f.base,
            top: f.base + DVec3::Z * (f.pole_height + 0.03),
            radius: POLE_RADIUS,
            color: POLE,
        });
        renderables.push(Renderable::Flag { color: flag_color(f.color_id) });
    }
    Ok((states, SceneGeometry { ground: ground(s.ground_texture_id), backdrop: s.backdrop_id, renderables }))
}

fn simulate_balls(s: &BallSceneSpec, dims: &VideoDims) -> Result<(Vec<FrameState>, SceneGeometry), RealizeError> {
    let params = BallParams::default();
    let initial: Vec<BallState> = s
        .balls
        .iter()
        .map(|b| BallState::resting(b.material, b.position.x, b.position.y, &params))
        .collect();
    let push = Push { force: Magnitude::new(s.force_magnitude)?, angle: Angle::from_degrees(s.force_angle)? };
    let run = simulate_ball(&initial, s.target, push, &params, &SimClock::for_dims(dims))?;
    let states = run.into_iter().map(|balls| FrameState { balls, ..Default::default() }).collect();
    let renderables = s
        .balls
        .iter()
        .map(|b| Renderable::Ball { color: ball_color(b.color_id), material: b.material })
        .collect();
    Ok((states, SceneGeometry { ground: ground(s.ground_texture_id), backdrop: s.backdrop_id, renderables }))
}

fn simulate_plant(s: &PlantSceneSpec, dims: &VideoDims) -> Result<(Vec<FrameState>, SceneGeometry), RealizeError> {
    let angle = Angle::from_degrees(s.force_angle)?;
    // The stem bends in the plane of the poke.
    let chain = ChainState::plant(DVec3::ZERO, angle);
    let poke = Poke { force: Magnitude::new(s.force_magnitude)?, angle, contact: s.contact };
    let clock = SimClock::with_substeps(dims, ChainState::SUBSTEPS);
    let run = simulate_chain(&chain, poke, &ChainParams::default(), &clock)?;
    let states = run.into_iter().map(|c| FrameState { chain: Some(c), ..Default::default() }).collect();
    let renderables = vec![Renderable::Plant { stem: STEM, bloom: BLOOM }];
    Ok((states, SceneGeometry { ground: ground(s.ground_texture_id), backdrop: s.backdrop_id, renderables }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{dataset_plan, AblationConfig, Scenario};

    fn small() -> VideoDims {
        VideoDims::new(6, 120, 180, 8).unwrap()
    }

    #[test]
    fn every_scenario_realizes() {
        for scenario in [Scenario::Flag, Scenario::Ball, Scenario::Plant] {
            let plan = dataset_plan(scenario, 2, 4, &AblationConfig::default(), &small()).unwrap();
            for e in &plan {
                let r = realize(e).unwrap();
                assert_eq!(r.frames.len(), 6);
                assert_eq!(r.states.len(), 6);
                let lines = r.object_states();
                assert_eq!(lines.first().unwrap().frame, 0);
                assert_eq!(lines.last().unwrap().frame, 5);
            }
        }
    }

    #[test]
    fn realization_is_deterministic() {
        let plan = dataset_plan(Scenario::Flag, 1, 8, &AblationConfig::default(), &small()).unwrap();
        let (a, b) = (realize(&plan[0]).unwrap(), realize(&plan[0]).unwrap());
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.object_states(), b.object_states());
    }

    #[test]
    fn placed_flag_keeps_its_shape() {
        let cfg = SceneConfig::default();
        let params = ClothParams::default();
        let t = settled_template(&cfg, &params, 1.0 / 256.0).unwrap();
        let p = placed(&t, &t.topology, DVec3::new(1.0, 2.0, 1.3), 90.0);
        for s in &t.topology.springs {
            let a = t.positions[s.a].distance(t.positions[s.b]);
            let b = p.positions[s.a].distance(p.positions[s.b]);
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.positions[0] - DVec3::new(1.0, 2.0, 1.3)).length() < 1e-12);
    }
}
