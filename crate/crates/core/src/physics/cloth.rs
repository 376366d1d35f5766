//! Mass-spring cloth for flags in wind.
//!
//! A rectangular vertex grid joined by structural, shear and bend springs,
//! integrated with semi-implicit Euler. Wind pushes each vertex along its
//! normal: `F = c_w · s_max · speed · max(0, n̂·ŵ) · n̂`, with `n̂` oriented
//! toward the leeward side so wind only ever pushes.

use std::sync::Arc;

use glam::DVec3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SimClock, SimError, GRAVITY};
use crate::seed::substream;
use crate::types::{Angle, Magnitude};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringKind {
    Structural,
    Shear,
    Bend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub rest: f64,
    pub kind: SpringKind,
}

/// Connectivity shared by every snapshot of one cloth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClothTopology {
    pub rows: usize,
    pub cols: usize,
    pub pinned: Vec<bool>,
    pub springs: Vec<Spring>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClothState {
    pub topology: Arc<ClothTopology>,
    pub positions: Vec<DVec3>,
    pub velocities: Vec<DVec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClothParams {
    /// kg per vertex.
    pub vertex_mass: f64,
    /// N/m.
    pub structural_stiffness: f64,
    pub shear_stiffness: f64,
    pub bend_stiffness: f64,
    /// N·s/m along each spring.
    pub spring_damping: f64,
    /// 1/s; force `−m·γ·v`.
    pub air_damping: f64,
    /// `c_w`, N per (m/s) per vertex.
    pub wind_coefficient: f64,
    /// `s_max`, m/s at wind speed 1.
    pub max_wind_speed: f64,
    /// Any coordinate beyond this many meters counts as divergence.
    pub sanity_bound: f64,
}

impl Default for ClothParams {
    fn default() -> Self {
        Self {
            vertex_mass: 0.002,
            structural_stiffness: 40.0,
            shear_stiffness: 10.0,
            bend_stiffness: 4.0,
            spring_damping: 0.02,
            air_damping: 2.0,
            wind_coefficient: 0.003,
            max_wind_speed: 10.0,
            sanity_bound: 1.0e3,
        }
    }
}

impl ClothParams {
    /// Default substeps per frame; the springs need a finer step than balls.
    pub const SUBSTEPS: u32 = 32;
}

/// Optional wind-speed fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Gust {
    #[default]
    None,
    /// Ornstein-Uhlenbeck multiplier `1 + amplitude·g(t)` with unit
    /// stationary variance and the given correlation time (s).
    Smoothed {
        amplitude: f64,
        correlation_time: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindField {
    pub speed: Magnitude,
    /// Ground-plane direction the wind blows toward.
    pub angle: Angle,
    #[serde(default)]
    pub gust: Gust,
}

impl WindField {
    pub fn calm() -> Self {
        Self {
            speed: Magnitude::new(0.0).unwrap(),
            angle: Angle::from_degrees(0.0).unwrap(),
            gust: Gust::None,
        }
    }

    pub fn direction(&self) -> DVec3 {
        let r = self.angle.radians();
        DVec3::new(r.cos(), r.sin(), 0.0)
    }
}

impl ClothState {
    /// A flat rectangular flag hanging from a vertical pole.
    ///
    /// The pole edge (column 0) is pinned along the pole from `pole_top`
    /// downward; the fly end extends `length` meters horizontally along
    /// `yaw`. `rows × cols` counts vertices.
    pub fn flag(pole_top: DVec3, yaw: Angle, length: f64, height: f64, rows: usize, cols: usize) -> Self {
        assert!(rows >= 2 && cols >= 2, "flag grid needs at least 2x2 vertices");
        let r = yaw.radians();
        let along = DVec3::new(r.cos(), r.sin(), 0.0);
        let dx = length / (cols - 1) as f64;
        let dz = height / (rows - 1) as f64;
        let mut positions = Vec::with_capacity(rows * cols);
        let mut pinned = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                positions.push(pole_top + along * (col as f64 * dx) - DVec3::Z * (row as f64 * dz));
                pinned.push(col == 0);
            }
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let mut springs = Vec::new();
        let mut add = |a: usize, b: usize, kind| {
            let rest = positions[a].distance(positions[b]);
            springs.push(Spring { a, b, rest, kind });
        };
        for row in 0..rows {
            for col in 0..cols {
                if col + 1 < cols {
                    add(idx(row, col), idx(row, col + 1), SpringKind::Structural);
                }
                if row + 1 < rows {
                    add(idx(row, col), idx(row + 1, col), SpringKind::Structural);
                }
                if row + 1 < rows && col + 1 < cols {
                    add(idx(row, col), idx(row + 1, col + 1), SpringKind::Shear);
                    add(idx(row, col + 1), idx(row + 1, col), SpringKind::Shear);
                }
                if col + 2 < cols {
                    add(idx(row, col), idx(row, col + 2), SpringKind::Bend);
                }
                if row + 2 < rows {
                    add(idx(row, col), idx(row + 2, col), SpringKind::Bend);
                }
            }
        }
        let velocities = vec![DVec3::ZERO; positions.len()];
        Self {
            topology: Arc::new(ClothTopology {
                rows,
                cols,
                pinned,
                springs,
            }),
            positions,
            velocities,
        }
    }

    pub fn rows(&self) -> usize {
        self.topology.rows
    }
    pub fn cols(&self) -> usize {
        self.topology.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.topology.cols + col
    }

    /// Vertices of the free (fly) edge, the last column.
    pub fn free_edge(&self) -> impl Iterator<Item = DVec3> + '_ {
        let c = self.cols() - 1;
        (0..self.rows()).map(move |r| self.positions[self.index(r, c)])
    }

    pub fn free_edge_centroid(&self) -> DVec3 {
        self.free_edge().sum::<DVec3>() / self.rows() as f64
    }

    pub fn centroid(&self) -> DVec3 {
        self.positions.iter().sum::<DVec3>() / self.positions.len() as f64
    }

    pub fn max_kinetic_energy(&self, vertex_mass: f64) -> f64 {
        self.velocities
            .iter()
            .map(|v| 0.5 * vertex_mass * v.length_squared())
            .fold(0.0, f64::max)
    }

    /// Largest `length / rest` over structural springs.
    pub fn max_structural_strain(&self) -> f64 {
        self.topology
            .springs
            .iter()
            .filter(|s| s.kind == SpringKind::Structural)
            .map(|s| self.positions[s.a].distance(self.positions[s.b]) / s.rest)
            .fold(0.0, f64::max)
    }

    /// Unit normal at a vertex from central differences on the grid, or
    /// zero where the surface is degenerate.
    pub fn vertex_normal(&self, row: usize, col: usize) -> DVec3 {
        let (rows, cols) = (self.rows(), self.cols());
        let p = |r: usize, c: usize| self.positions[r * cols + c];
        let du = p(row, (col + 1).min(cols - 1)) - p(row, col.saturating_sub(1));
        let dv = p((row + 1).min(rows - 1), col) - p(row.saturating_sub(1), col);
        du.cross(dv).normalize_or_zero()
    }

    /// Runs with no wind for `seconds`, then zeroes velocities: the flag
    /// starts a clip from rest.
    pub fn settle(&mut self, params: &ClothParams, seconds: f64, dt: f64) -> Result<(), SimError> {
        let steps = (seconds / dt).ceil() as usize;
        let mut forces = vec![DVec3::ZERO; self.positions.len()];
        let calm = WindField::calm();
        for step in 0..steps {
            self.step(params, &calm, 0.0, dt, &mut forces, step)?;
        }
        self.velocities.fill(DVec3::ZERO);
        Ok(())
    }

    fn step(
        &mut self,
        params: &ClothParams,
        wind: &WindField,
        speed: f64,
        dt: f64,
        forces: &mut [DVec3],
        step: usize,
    ) -> Result<(), SimError> {
        let m = params.vertex_mass;
        let gravity = DVec3::new(0.0, 0.0, -GRAVITY * m);
        for (f, v) in forces.iter_mut().zip(&self.velocities) {
            *f = gravity - *v * (m * params.air_damping);
        }
        for s in &self.topology.springs {
            let k = match s.kind {
                SpringKind::Structural => params.structural_stiffness,
                SpringKind::Shear => params.shear_stiffness,
                SpringKind::Bend => params.bend_stiffness,
            };
            let d = self.positions[s.b] - self.positions[s.a];
            let len = d.length();
            if len == 0.0 {
                continue;
            }
            let dir = d / len;
            let rel_v = (self.velocities[s.b] - self.velocities[s.a]).dot(dir);
            let f = dir * (k * (len - s.rest) + params.spring_damping * rel_v);
            forces[s.a] += f;
            forces[s.b] -= f;
        }
        if speed > 0.0 {
            let w = wind.direction();
            let scale = params.wind_coefficient * params.max_wind_speed * speed;
            for row in 0..self.rows() {
                for col in 0..self.cols() {
                    let mut n = self.vertex_normal(row, col);
                    if n.dot(w) < 0.0 {
                        n = -n;
                    }
                    forces[self.index(row, col)] += n * (scale * n.dot(w).max(0.0));
                }
            }
        }
        let bound = params.sanity_bound;
        let vertices = self.positions.iter_mut().zip(&mut self.velocities).zip(forces.iter()).zip(&self.topology.pinned);
        for (((p, v), f), &pinned) in vertices {
            if pinned {
                continue;
            }
            *v += *f * (dt / m);
            *p += *v * dt;
            if !p.is_finite() || p.abs().max_element() > bound {
                return Err(SimError::Diverged { step });
            }
        }
        Ok(())
    }
}

struct GustProcess {
    amplitude: f64,
    decay: f64,
    kick: f64,
    value: f64,
    rng: rand_chacha::ChaCha8Rng,
}

impl GustProcess {
    fn new(gust: &Gust, dt: f64) -> Option<Self> {
        match *gust {
            Gust::None => None,
            Gust::Smoothed {
                amplitude,
                correlation_time,
                seed,
            } => {
                let decay = (-dt / correlation_time.max(dt)).exp();
                Some(Self {
                    amplitude,
                    decay,
                    kick: (1.0 - decay * decay).sqrt(),
                    value: 0.0,
                    rng: substream(seed, 0x6057),
                })
            }
        }
    }

    fn next(&mut self) -> f64 {
        // Sum of uniforms: an approximately normal, platform-stable draw.
        let z: f64 = (0..12).map(|_| self.rng.random::<f64>()).sum::<f64>() - 6.0;
        self.value = self.decay * self.value + self.kick * z;
        (1.0 + self.amplitude * self.value).max(0.0)
    }
}

/// Simulates a cloth in wind, returning one snapshot per output frame (the
/// first is the input state).
pub fn simulate_cloth(
    cloth: &ClothState,
    wind: &WindField,
    params: &ClothParams,
    clock: &SimClock,
) -> Result<Vec<ClothState>, SimError> {
    if !cloth.topology.pinned.iter().any(|&p| p) {
        return Err(SimError::InvalidInitial("cloth has no pinned vertex".into()));
    }
    if cloth.topology.springs.iter().any(|s| s.rest.is_nan() || s.rest <= 0.0) {
        return Err(SimError::InvalidInitial("nonpositive spring rest length".into()));
    }
    let dt = clock.dt();
    let mut state = cloth.clone();
    let mut forces = vec![DVec3::ZERO; state.positions.len()];
    let mut gust = GustProcess::new(&wind.gust, dt);
    let mut frames = Vec::with_capacity(clock.frames() as usize);
    frames.push(state.clone());
    let mut step = 0usize;
    for _ in 1..clock.frames() {
        for _ in 0..clock.substeps() {
            let factor = gust.as_mut().map_or(1.0, GustProcess::next);
            let speed = wind.speed.get() * factor;
            state.step(params, wind, speed, dt, &mut forces, step)?;
            step += 1;
        }
        frames.push(state.clone());
    }
    Ok(frames)
}
