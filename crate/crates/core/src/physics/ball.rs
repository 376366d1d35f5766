//! Impulse-driven rolling balls.
//!
//! Balls are point masses riding on the ground plane. Rolling resistance is
//! a constant deceleration `μ_r·g` opposing motion, integrated exactly per
//! substep (the motion is piecewise uniformly decelerated, so the stopping
//! point is hit exactly rather than overshot by half a step). Contacts are
//! frictionless restitution impulses.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::{ImpulseScale, SimClock, SimError, GRAVITY};
use crate::types::{Angle, Magnitude};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallMaterial {
    Soccer,
    Bowling,
}

impl BallMaterial {
    /// Mass relative to a soccer ball of the same radius.
    pub fn mass_ratio(self) -> f64 {
        match self {
            Self::Soccer => 1.0,
            Self::Bowling => 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Soccer => "soccer",
            Self::Bowling => "bowling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    /// kg.
    pub soccer_mass: f64,
    /// m, shared by both materials.
    pub radius: f64,
    /// Dimensionless; deceleration is `rolling_resistance · g`.
    pub rolling_resistance: f64,
    pub restitution: f64,
    pub impulse: ImpulseScale,
}

impl Default for BallParams {
    fn default() -> Self {
        // A soccer ball leaves at 2 m/s for F = 1 and rolls ~4 m before
        // stopping, about two thirds of the default play area.
        let soccer_mass = 0.43;
        Self {
            soccer_mass,
            radius: 0.11,
            rolling_resistance: 0.5 / GRAVITY,
            restitution: 0.9,
            impulse: ImpulseScale {
                min: soccer_mass * 0.5,
                max: soccer_mass * 2.0,
            },
        }
    }
}

impl BallParams {
    pub fn deceleration(&self) -> f64 {
        self.rolling_resistance * GRAVITY
    }

    pub fn mass(&self, material: BallMaterial) -> f64 {
        self.soccer_mass * material.mass_ratio()
    }

    /// Closed-form stopping distance for a lone ball pushed with `force`.
    pub fn stopping_distance(&self, material: BallMaterial, force: Magnitude) -> f64 {
        let v0 = self.impulse.impulse(force) / self.mass(material);
        v0 * v0 / (2.0 * self.deceleration())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: DVec3,
    pub velocity: DVec3,
    pub radius: f64,
    pub mass: f64,
    pub material: BallMaterial,
}

impl BallState {
    /// A ball at rest on the ground at `(x, y)`.
    pub fn resting(material: BallMaterial, x: f64, y: f64, params: &BallParams) -> Self {
        Self {
            position: DVec3::new(x, y, params.radius),
            velocity: DVec3::ZERO,
            radius: params.radius,
            mass: params.mass(material),
            material,
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocity.length_squared()
    }

    pub fn momentum(&self) -> DVec3 {
        self.velocity * self.mass
    }
}

/// A horizontal push of the target ball at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Push {
    pub force: Magnitude,
    /// Ground-plane direction of the push.
    pub angle: Angle,
}

impl Push {
    pub fn direction(&self) -> DVec3 {
        let r = self.angle.radians();
        DVec3::new(r.cos(), r.sin(), 0.0)
    }
}

/// Simulates the balls and returns one snapshot per output frame, the first
/// being the configuration at `t = 0` just after the push.
pub fn simulate_ball(
    initial: &[BallState],
    target: usize,
    push: Push,
    params: &BallParams,
    clock: &SimClock,
) -> Result<Vec<Vec<BallState>>, SimError> {
    validate(initial, target)?;
    let mut balls = initial.to_vec();
    let j = params.impulse.impulse(push.force);
    let target_mass = balls[target].mass;
    balls[target].velocity += push.direction() * (j / target_mass);

    let decel = params.deceleration();
    let dt = clock.dt();
    let mut frames = Vec::with_capacity(clock.frames() as usize);
    frames.push(balls.clone());
    for _ in 1..clock.frames() {
        for _ in 0..clock.substeps() {
            for b in balls.iter_mut() {
                roll(b, decel, dt);
            }
            collide_all(&mut balls, params.restitution);
        }
        frames.push(balls.clone());
    }
    Ok(frames)
}

fn validate(balls: &[BallState], target: usize) -> Result<(), SimError> {
    if target >= balls.len() {
        return Err(SimError::Index {
            index: target,
            len: balls.len(),
        });
    }
    for (i, b) in balls.iter().enumerate() {
        if !(b.mass > 0.0 && b.radius > 0.0 && b.mass.is_finite()) || !b.position.is_finite() {
            return Err(SimError::BadBall(i));
        }
        if i != target && b.velocity != DVec3::ZERO {
            return Err(SimError::InvalidInitial(format!(
                "distractor {i} is moving at t = 0"
            )));
        }
        for (k, other) in balls.iter().enumerate().skip(i + 1) {
            let d = horizontal(other.position - b.position).length();
            if d < b.radius + other.radius {
                return Err(SimError::Overlap(i, k));
            }
        }
    }
    Ok(())
}

fn horizontal(v: DVec3) -> DVec3 {
    DVec3::new(v.x, v.y, 0.0)
}

/// Advances one ball by `dt` under constant deceleration, stopping exactly
/// when its speed reaches zero.
fn roll(b: &mut BallState, decel: f64, dt: f64) {
    let speed = b.velocity.length();
    if speed == 0.0 {
        return;
    }
    let dir = b.velocity / speed;
    if speed <= decel * dt {
        b.position += dir * (speed * speed / (2.0 * decel));
        b.velocity = DVec3::ZERO;
    } else {
        b.position += dir * (speed * dt - 0.5 * decel * dt * dt);
        b.velocity = dir * (speed - decel * dt);
    }
}

fn collide_all(balls: &mut [BallState], restitution: f64) {
    for i in 0..balls.len() {
        for k in i + 1..balls.len() {
            let (a, b) = balls.split_at_mut(k);
            resolve_contact(&mut a[i], &mut b[0], restitution);
        }
    }
}

/// Exchanges a restitution impulse between two touching, approaching balls
/// and separates any overlap. Returns whether an impulse was applied.
pub fn resolve_contact(a: &mut BallState, b: &mut BallState, restitution: f64) -> bool {
    let delta = horizontal(b.position - a.position);
    let dist = delta.length();
    let reach = a.radius + b.radius;
    if dist >= reach || dist == 0.0 {
        return false;
    }
    let n = delta / dist;
    let approach = (b.velocity - a.velocity).dot(n);
    let mut hit = false;
    if approach < 0.0 {
        let j = -(1.0 + restitution) * approach / (1.0 / a.mass + 1.0 / b.mass);
        a.velocity -= n * (j / a.mass);
        b.velocity += n * (j / b.mass);
        hit = true;
    }
    let overlap = reach - dist;
    let total = a.mass + b.mass;
    a.position -= n * (overlap * b.mass / total);
    b.position += n * (overlap * a.mass / total);
    hit
}
