//! Deterministic software renderer.
//!
//! The sky and ground are ray cast per pixel; spheres and capsules are ray
//! cast inside their screen bounding boxes; cloth is rasterized as flat
//! shaded triangles. Everything shares one depth buffer holding distance
//! along the optical axis.

pub mod palette;

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraModel;
use crate::image::RgbImage;
use crate::par;
use crate::physics::{BallMaterial, BallState, ChainState, ClothState};
use crate::types::VideoDims;
use palette::{Backdrop, GroundTexture, Rgb};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("clip needs {expected} states, got {got}")]
    ClipLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ground {
    pub texture: usize,
    /// Half side of the square ground patch, meters.
    pub extent: f64,
}

/// Appearance of one scene object. Balls, flags and the plant take their
/// geometry from the per-frame [`FrameState`], matched in order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Renderable {
    Ball { color: Rgb, material: BallMaterial },
    Flag { color: Rgb },
    Plant { stem: Rgb, bloom: Rgb },
    Pole { base: DVec3, top: DVec3, radius: f64, color: Rgb },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub ground: Option<Ground>,
    pub backdrop: usize,
    pub renderables: Vec<Renderable>,
}

/// Simulator output for one frame.
#[derive(Debug, Clone, Default)]
pub struct FrameState {
    pub balls: Vec<BallState>,
    pub flags: Vec<ClothState>,
    pub chain: Option<ChainState>,
}

pub const STEM_RADIUS: f64 = 0.012;
pub const BLOOM_RADIUS: f64 = 0.035;
const SHADOW: f64 = 0.6;
const NEAR: f64 = 0.05;

fn light() -> DVec3 {
    DVec3::new(0.35, 0.25, 0.9).normalize()
}

fn scale(c: Rgb, s: f64) -> Rgb {
    c.map(|v| (v as f64 * s).round().clamp(0.0, 255.0) as u8)
}

#[derive(Clone, Copy)]
struct Px {
    rgb: Rgb,
    depth: f64,
}

struct Frame<'a> {
    cam: CameraModel,
    right: DVec3,
    up: DVec3,
    forward: DVec3,
    focal: f64,
    center: (f64, f64),
    width: usize,
    height: usize,
    buf: &'a mut [Px],
}

impl Frame<'_> {
    fn ray(&self, col: usize, row: usize) -> DVec3 {
        self.forward
            + self.right * ((col as f64 - self.center.0) / self.focal)
            + self.up * ((self.center.1 - row as f64) / self.focal)
    }

    /// Pixel box covering a world-space ball around `c`, or `None` when it
    /// is off screen or crosses the near plane.
    fn bounds(&self, points: &[DVec3], radius: f64) -> Option<(usize, usize, usize, usize)> {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &p in points {
            for corner in 0..8 {
                let sx = if corner & 1 == 0 { -1.0 } else { 1.0 };
                let sy = if corner & 2 == 0 { -1.0 } else { 1.0 };
                let sz = if corner & 4 == 0 { -1.0 } else { 1.0 };
                let q = p + (self.right * sx + self.up * sy + self.forward * sz) * radius;
                if self.cam.depth(q) < NEAR {
                    return None;
                }
                let (x, y) = self.cam.project_point(q).ok()?;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
        clip_box(x0, y0, x1, y1, self.width, self.height)
    }

    fn put(&mut self, col: usize, row: usize, depth: f64, rgb: Rgb) {
        let px = &mut self.buf[row * self.width + col];
        if depth < px.depth {
            *px = Px { rgb, depth };
        }
    }

    fn sphere(&mut self, c: DVec3, r: f64, shade: impl Fn(DVec3) -> Rgb) {
        let Some((x0, y0, x1, y1)) = self.bounds(&[c], r) else { return };
        let o = self.cam.position;
        let oc = o - c;
        for row in y0..=y1 {
            for col in x0..=x1 {
                let d = self.ray(col, row);
                let (a, b, k) = (d.dot(d), oc.dot(d), oc.dot(oc) - r * r);
                let disc = b * b - a * k;
                if disc < 0.0 {
                    continue;
                }
                let t = (-b - disc.sqrt()) / a;
                if t <= 0.0 {
                    continue;
                }
                let n = (oc + d * t) / r;
                self.put(col, row, t, shade(n));
            }
        }
    }

    fn capsule(&mut self, a: DVec3, b: DVec3, r: f64, color: Rgb) {
        let Some((x0, y0, x1, y1)) = self.bounds(&[a, b], r) else { return };
        let o = self.cam.position;
        let l = light();
        for row in y0..=y1 {
            for col in x0..=x1 {
                let d = self.ray(col, row);
                let (t, s) = closest_ray_segment(o, d, a, b);
                let p = o + d * t;
                let q = a + (b - a) * s;
                let dist2 = p.distance_squared(q);
                if dist2 > r * r || t <= 0.0 {
                    continue;
                }
                let back = ((r * r - dist2).sqrt()) / d.length();
                let hit = o + d * (t - back);
                let n = (hit - q).normalize_or_zero();
                self.put(col, row, t - back, scale(color, 0.7 + 0.3 * n.dot(l).max(0.0)));
            }
        }
    }

    fn cloth(&mut self, cloth: &ClothState, color: Rgb) {
        let l = light();
        let screen: Vec<Option<(f64, f64, f64)>> = cloth
            .positions
            .iter()
            .map(|&p| {
                let z = self.cam.depth(p);
                if z < NEAR {
                    return None;
                }
                self.cam.project_point(p).ok().map(|(x, y)| (x, y, z))
            })
            .collect();
        for row in 0..cloth.rows() - 1 {
            for col in 0..cloth.cols() - 1 {
                let q = [
                    cloth.index(row, col),
                    cloth.index(row, col + 1),
                    cloth.index(row + 1, col + 1),
                    cloth.index(row + 1, col),
                ];
                for tri in [[q[0], q[1], q[2]], [q[0], q[2], q[3]]] {
                    let [p0, p1, p2] = tri.map(|i| cloth.positions[i]);
                    let n = (p1 - p0).cross(p2 - p0).normalize_or_zero();
                    let rgb = scale(color, 0.55 + 0.45 * n.dot(l).abs());
                    if let (Some(a), Some(b), Some(c)) = (screen[tri[0]], screen[tri[1]], screen[tri[2]]) {
                        self.triangle(a, b, c, rgb);
                    }
                }
            }
        }
    }

    fn triangle(&mut self, a: (f64, f64, f64), b: (f64, f64, f64), c: (f64, f64, f64), rgb: Rgb) {
        let area = edge(a, b, c.0, c.1);
        if area.abs() < 1e-12 {
            return;
        }
        let Some((x0, y0, x1, y1)) = clip_box(
            a.0.min(b.0).min(c.0),
            a.1.min(b.1).min(c.1),
            a.0.max(b.0).max(c.0),
            a.1.max(b.1).max(c.1),
            self.width,
            self.height,
        ) else {
            return;
        };
        for row in y0..=y1 {
            for col in x0..=x1 {
                let (x, y) = (col as f64, row as f64);
                let w0 = edge(b, c, x, y) / area;
                let w1 = edge(c, a, x, y) / area;
                let w2 = edge(a, b, x, y) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let inv = w0 / a.2 + w1 / b.2 + w2 / c.2;
                self.put(col, row, 1.0 / inv, rgb);
            }
        }
    }
}

fn edge(a: (f64, f64, f64), b: (f64, f64, f64), x: f64, y: f64) -> f64 {
    (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
}

fn clip_box(x0: f64, y0: f64, x1: f64, y1: f64, w: usize, h: usize) -> Option<(usize, usize, usize, usize)> {
    if !(x1 >= 0.0 && y1 >= 0.0 && x0 <= (w - 1) as f64 && y0 <= (h - 1) as f64) {
        return None;
    }
    Some((
        x0.max(0.0).floor() as usize,
        y0.max(0.0).floor() as usize,
        (x1.ceil() as usize).min(w - 1),
        (y1.ceil() as usize).min(h - 1),
    ))
}

/// Ray parameter and segment parameter of the closest approach between
/// `o + t·d` and the segment `a..b`.
fn closest_ray_segment(o: DVec3, d: DVec3, a: DVec3, b: DVec3) -> (f64, f64) {
    let u = b - a;
    let w = o - a;
    let (dd, du, uu) = (d.dot(d), d.dot(u), u.dot(u));
    let (dw, uw) = (d.dot(w), u.dot(w));
    let denom = dd * uu - du * du;
    let mut s = if denom > 1e-12 { ((dd * uw - du * dw) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let t = (du * s - dw) / dd;
    if uu > 0.0 {
        s = ((d * t + w).dot(u) / uu).clamp(0.0, 1.0);
    }
    ((u * s - w).dot(d) / dd, s)
}

/// Ground-plane blob shadow: center, radius.
type Shadow = (DVec3, f64);

fn shadow_casters(scene: &SceneGeometry, state: &FrameState) -> Vec<Shadow> {
    let mut out: Vec<Shadow> = state.balls.iter().map(|b| (b.position, b.radius * 1.15)).collect();
    for r in &scene.renderables {
        match *r {
            Renderable::Plant { .. } => {
                if let Some(c) = &state.chain {
                    out.push((c.base, 0.06));
                }
            }
            Renderable::Pole { base, radius, .. } => out.push((base, radius * 2.5)),
            _ => {}
        }
    }
    out
}

fn background(o: DVec3, d: DVec3, backdrop: &Backdrop, ground: Option<&(Ground, GroundTexture)>, shadows: &[Shadow]) -> Px {
    if let Some((g, tex)) = ground {
        if d.z < 0.0 {
            let t = -o.z / d.z;
            let p = o + d * t;
            if p.x.abs() <= g.extent && p.y.abs() <= g.extent {
                let mut rgb = tex.shade(p.x, p.y);
                let shaded = shadows.iter().any(|(c, r)| {
                    let (dx, dy) = (p.x - c.x, p.y - c.y);
                    dx * dx + dy * dy < r * r
                });
                if shaded {
                    rgb = scale(rgb, SHADOW);
                }
                return Px { rgb, depth: t };
            }
        }
    }
    let n = d.normalize();
    Px {
        rgb: backdrop.shade(n.z.clamp(-1.0, 1.0).asin(), n.y.atan2(n.x)),
        depth: f64::INFINITY,
    }
}

/// Fixed panel directions for the soccer pattern (icosahedron vertices).
fn soccer_panels() -> [DVec3; 12] {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        (0.0, 1.0, p), (0.0, -1.0, p), (0.0, 1.0, -p), (0.0, -1.0, -p),
        (1.0, p, 0.0), (-1.0, p, 0.0), (1.0, -p, 0.0), (-1.0, -p, 0.0),
        (p, 0.0, 1.0), (-p, 0.0, 1.0), (p, 0.0, -1.0), (-p, 0.0, -1.0),
    ];
    v.map(|(x, y, z)| DVec3::new(x, y, z).normalize())
}

/// Shading of a ball surface point with outward normal `n`. Every value
/// stays within 0.78..1.0 of the base color so that color segmentation
/// sees the whole silhouette.
pub fn ball_shade(color: Rgb, material: BallMaterial, n: DVec3) -> Rgb {
    let mut s = 0.85 + 0.15 * n.dot(light()).max(0.0);
    let marked = match material {
        BallMaterial::Soccer => soccer_panels().iter().any(|v| n.dot(*v) > 0.93),
        BallMaterial::Bowling => {
            let holes = [DVec3::new(0.2, -0.3, 0.93), DVec3::new(0.35, -0.15, 0.92), DVec3::new(0.1, -0.05, 0.99)];
            holes.iter().any(|h| n.dot(h.normalize()) > 0.995)
        }
    };
    if marked {
        s *= 0.92;
    }
    scale(color, s)
}

/// Renders one frame at `dims` resolution; the camera is rescaled to it.
pub fn render_frame(scene: &SceneGeometry, state: &FrameState, camera: &CameraModel, dims: &VideoDims) -> RgbImage {
    let cam = camera.with_dims(dims);
    let (width, height) = (dims.width() as usize, dims.height() as usize);
    let (right, up, forward) = cam.basis();
    let backdrop = Backdrop::get(scene.backdrop);
    let ground = scene.ground.map(|g| (g, GroundTexture::get(g.texture)));
    let shadows = shadow_casters(scene, state);

    let mut buf = vec![Px { rgb: [0; 3], depth: f64::INFINITY }; width * height];
    let focal = cam.focal();
    let center = cam.principal_point();
    par::for_each_chunk_mut(&mut buf, width, |row, line| {
        for (col, px) in line.iter_mut().enumerate() {
            let d = forward + right * ((col as f64 - center.0) / focal) + up * ((center.1 - row as f64) / focal);
            *px = background(cam.position, d, &backdrop, ground.as_ref(), &shadows);
        }
    });
    let mut frame = Frame {
        cam,
        right,
        up,
        forward,
        focal,
        center,
        width,
        height,
        buf: &mut buf,
    };

    let (mut balls, mut flags) = (state.balls.iter(), state.flags.iter());
    for r in &scene.renderables {
        match *r {
            Renderable::Ball { color, material } => {
                if let Some(b) = balls.next() {
                    frame.sphere(b.position, b.radius, |n| ball_shade(color, material, n));
                }
            }
            Renderable::Flag { color } => {
                if let Some(f) = flags.next() {
                    frame.cloth(f, color);
                }
            }
            Renderable::Plant { stem, bloom } => {
                if let Some(chain) = &state.chain {
                    let joints = chain.joints();
                    for w in joints.windows(2) {
                        frame.capsule(w[0], w[1], STEM_RADIUS, stem);
                    }
                    let l = light();
                    frame.sphere(chain.tip(), BLOOM_RADIUS, |n| scale(bloom, 0.75 + 0.25 * n.dot(l).max(0.0)));
                }
            }
            Renderable::Pole { base, top, radius, color } => frame.capsule(base, top, radius, color),
        }
    }

    let mut data = Vec::with_capacity(width * height * 3);
    for px in &buf {
        data.extend_from_slice(&px.rgb);
    }
    RgbImage::from_raw(dims.width(), dims.height(), data).expect("buffer matches dims")
}

/// Renders every state; frame 0 is the clip's initial frame.
pub fn render_clip(
    scene: &SceneGeometry,
    states: &[FrameState],
    camera: &CameraModel,
    dims: &VideoDims,
) -> Result<Vec<RgbImage>, RenderError> {
    if states.len() != dims.frames() as usize {
        return Err(RenderError::ClipLength {
            expected: dims.frames() as usize,
            got: states.len(),
        });
    }
    Ok(par::map_slice(states, |s| render_frame(scene, s, camera, dims)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{BallParams, ChainState};
    use crate::types::Angle;

    const RED: Rgb = [230, 20, 20];

    fn dims() -> VideoDims {
        VideoDims::new(4, 240, 360, 8).unwrap()
    }

    fn camera() -> CameraModel {
        CameraModel::orbit(DVec3::new(0.0, 0.0, 0.11), 250.0, 50.0, 5.0, 45.0, &dims()).unwrap()
    }

    fn ball_scene() -> SceneGeometry {
        SceneGeometry {
            ground: Some(Ground { texture: 5, extent: 30.0 }),
            backdrop: 3,
            renderables: vec![Renderable::Ball { color: RED, material: BallMaterial::Soccer }],
        }
    }

    fn ball_at(x: f64, y: f64) -> FrameState {
        FrameState {
            balls: vec![BallState::resting(BallMaterial::Soccer, x, y, &BallParams::default())],
            ..Default::default()
        }
    }

    /// Centroid of pixels within 60 per channel of `rgb`.
    fn silhouette(img: &RgbImage, rgb: Rgb) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..img.height() {
            for x in 0..img.width() {
                if palette::chebyshev(img.pixel(x, y), rgb) <= 60 {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        (n > 0.0).then(|| (sx / n, sy / n))
    }

    #[test]
    fn empty_scene_is_pure_backdrop() {
        let scene = SceneGeometry { ground: None, backdrop: 7, renderables: vec![] };
        let cam = camera();
        let img = render_frame(&scene, &FrameState::default(), &cam, &dims());
        let b = Backdrop::get(7);
        for (x, y) in [(0, 0), (100, 30), (359, 239), (180, 120)] {
            let (_, d) = cam.ray(x as f64, y as f64);
            let n = d.normalize();
            assert_eq!(img.pixel(x, y), b.shade(n.z.asin(), n.y.atan2(n.x)));
        }
    }

    #[test]
    fn sphere_at_target_is_centered() {
        let img = render_frame(&ball_scene(), &ball_at(0.0, 0.0), &camera(), &dims());
        let (cx, cy) = silhouette(&img, RED).unwrap();
        assert!((cx - 180.0).abs() < 1.0 && (cy - 120.0).abs() < 1.0, "({cx}, {cy})");
    }

    #[test]
    fn silhouettes_follow_projection() {
        let cam = camera();
        for (x, y) in [(0.8, -0.4), (-1.0, 0.9), (1.5, 1.2), (-0.3, -1.4)] {
            let state = ball_at(x, y);
            let img = render_frame(&ball_scene(), &state, &cam, &dims());
            let (cx, cy) = silhouette(&img, RED).unwrap();
            let (px, py) = cam.with_dims(&dims()).project_point(state.balls[0].position).unwrap();
            assert!((cx - px).abs() < 1.0 && (cy - py).abs() < 1.0, "({cx}, {cy}) vs ({px}, {py})");
        }
    }

    #[test]
    fn rendering_is_bit_identical() {
        let a = render_frame(&ball_scene(), &ball_at(0.3, 0.2), &camera(), &dims());
        let b = render_frame(&ball_scene(), &ball_at(0.3, 0.2), &camera(), &dims());
        assert_eq!(a.encode_png().unwrap(), b.encode_png().unwrap());
    }

    #[test]
    fn stationary_clip_repeats_and_moving_ball_moves_right() {
        let cam = CameraModel::orbit(DVec3::ZERO, 270.0, 50.0, 5.0, 45.0, &dims()).unwrap();
        let still = vec![ball_at(0.1, 0.1); 4];
        let frames = render_clip(&ball_scene(), &still, &cam, &dims()).unwrap();
        assert!(frames.windows(2).all(|w| w[0] == w[1]));

        let moving: Vec<FrameState> = (0..4).map(|i| ball_at(-0.6 + 0.4 * i as f64, 0.0)).collect();
        let frames = render_clip(&ball_scene(), &moving, &cam, &dims()).unwrap();
        let cols: Vec<f64> = frames.iter().map(|f| silhouette(f, RED).unwrap().0).collect();
        assert!(cols.windows(2).all(|w| w[1] > w[0]), "{cols:?}");
    }

    #[test]
    fn clip_length_is_checked() {
        let err = render_clip(&ball_scene(), &[ball_at(0.0, 0.0)], &camera(), &dims()).unwrap_err();
        assert_eq!(err, RenderError::ClipLength { expected: 4, got: 1 });
    }

    #[test]
    fn ball_shading_stays_near_base_color() {
        for i in 0..2000 {
            let t = i as f64 * 0.61;
            let n = DVec3::new(t.cos() * (t * 0.37).sin(), t.sin() * (t * 0.37).sin(), (t * 0.37).cos());
            for m in [BallMaterial::Soccer, BallMaterial::Bowling] {
                assert!(palette::chebyshev(ball_shade([255, 255, 255], m, n), [255, 255, 255]) <= 60);
            }
        }
    }

    #[test]
    fn flag_and_plant_are_drawn() {
        let cam = CameraModel::orbit(DVec3::new(0.0, 0.0, 0.6), 270.0, 15.0, 3.0, 50.0, &dims()).unwrap();
        let pole_top = DVec3::new(-0.3, 0.0, 1.0);
        let flag = ClothState::flag(pole_top, Angle::from_degrees(0.0).unwrap(), 0.6, 0.4, 6, 9);
        let chain = ChainState::plant(DVec3::new(0.5, 0.0, 0.0), Angle::from_degrees(0.0).unwrap());
        let scene = SceneGeometry {
            ground: Some(Ground { texture: 0, extent: 30.0 }),
            backdrop: 0,
            renderables: vec![
                Renderable::Pole { base: DVec3::new(-0.3, 0.0, 0.0), top: pole_top, radius: 0.015, color: [200, 200, 200] },
                Renderable::Flag { color: [20, 40, 240] },
                Renderable::Plant { stem: [30, 200, 40], bloom: [250, 60, 200] },
            ],
        };
        let state = FrameState { flags: vec![flag], chain: Some(chain), ..Default::default() };
        let img = render_frame(&scene, &state, &cam, &dims());
        let count = |rgb: Rgb, tol: u8| {
            (0..img.height())
                .flat_map(|y| (0..img.width()).map(move |x| (x, y)))
                .filter(|&(x, y)| palette::chebyshev(img.pixel(x, y), rgb) <= tol)
                .count()
        };
        assert!(count([20, 40, 240], 120) > 500);
        assert!(count([30, 200, 40], 70) > 20);
        assert!(count([250, 60, 200], 70) > 10);
    }

    #[test]
    fn closest_approach_matches_brute_force() {
        let (o, d) = (DVec3::new(0.0, -3.0, 1.0), DVec3::new(0.1, 1.0, -0.2));
        let (a, b) = (DVec3::new(-1.0, 0.0, 0.0), DVec3::new(1.0, 0.5, 1.0));
        let (t, s) = closest_ray_segment(o, d, a, b);
        let best = (0..=1000)
            .flat_map(|i| (0..=200).map(move |j| (i as f64 * 0.01, j as f64 * 0.005)))
            .map(|(t, s)| (o + d * t).distance(a + (b - a) * s))
            .fold(f64::MAX, f64::min);
        assert!((o + d * t).distance(a + (b - a) * s) <= best + 1e-9);
    }
}
