//! Preview HTTP API.
//!
//! | route            | body                                   | returns                                  |
//! |------------------|----------------------------------------|------------------------------------------|
//! | `GET /scenes`    |                                        | canned scenes with first-frame thumbnails |
//! | `POST /encode`   | prompt file JSON, optional `tiles`     | control strip PNG, per-tile blob peaks   |
//! | `POST /simulate` | `scene`, `force`, `angle`, `material`?, `seed`?, `tiles`? | rendered strip PNG, projected trajectory |
//! | `GET /healthz`   |                                        | `ok`                                     |
//!
//! Pixel coordinates in requests and responses are in the full 480x720
//! frame; strips are rendered at the preview scale. Invalid prompts get
//! 400, points outside the frame 422, unknown scenes 404.

use std::sync::Arc;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use clap::Args;
use forceforge::camera::CameraModel;
use forceforge::encode::{frame_images, global_channels, BlobParams};
use forceforge::image::RgbImage;
use forceforge::physics::BallMaterial;
use forceforge::pipeline::realize_spec;
use forceforge::render::FrameState;
use forceforge::scene::{
    force_prompt, plant_contact_point, sample_scene, AblationConfig, PlanEntry, Scenario, SceneSpec,
};
use forceforge::{Angle, ForcePrompt, Magnitude, PromptError, VideoDims};
use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::encode::{encode_spec, scale_prompt};
use crate::{Outcome, PromptSpec};

pub const DEFAULT_TILES: usize = 7;
const MAX_TILES: usize = 49;

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub addr: String,
    /// Resolution of returned strips relative to 480x720.
    #[arg(long, default_value_t = 0.25)]
    pub preview_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneInfo {
    pub id: &'static str,
    pub scenario: Scenario,
    pub description: String,
    pub dims: VideoDims,
    pub camera: CameraModel,
    /// Base64 PNG of the first frame at preview scale.
    pub thumbnail_png: String,
}

struct CatalogScene {
    info: SceneInfo,
    spec: SceneSpec,
}

/// Immutable scene catalog and preview settings shared by all requests.
pub struct Catalog {
    scenes: Vec<CatalogScene>,
    full: VideoDims,
    preview: VideoDims,
    scale: f64,
    blob: BlobParams,
}

const CANNED: [(&str, Scenario, u64, &[&str]); 5] = [
    ("flag-single", Scenario::Flag, 101, &["single-flag"]),
    ("flag-field", Scenario::Flag, 102, &[]),
    ("ball-single", Scenario::Ball, 201, &["no-distractors"]),
    ("ball-group", Scenario::Ball, 202, &[]),
    ("plant", Scenario::Plant, 301, &[]),
];

impl Catalog {
    pub fn new(preview_scale: f64) -> anyhow::Result<Self> {
        let full = VideoDims::default();
        let preview = full.scaled(preview_scale)?;
        let blob = BlobParams::default().scaled(preview_scale)?;
        let scenes = CANNED
            .iter()
            .map(|&(id, scenario, seed, ablations)| {
                let mut ablation = AblationConfig::default();
                for a in ablations {
                    ablation.enable(a).map_err(anyhow::Error::msg)?;
                }
                let spec = sample_scene(scenario, seed, &ablation);
                let entry = PlanEntry::for_spec(0, spec.clone(), full, ablation)?;
                let first = realize_spec(&spec, &preview.with_frames(2)?).with_context(|| format!("rendering {id}"))?;
                let info = SceneInfo {
                    id,
                    scenario,
                    description: entry.prompt.text,
                    dims: full,
                    camera: spec.camera().camera(&full)?,
                    thumbnail_png: png_base64(&first.frames[0])?,
                };
                Ok(CatalogScene { info, spec })
            })
            .collect::<anyhow::Result<_>>()?;
        Ok(Self { scenes, full, preview, scale: preview_scale, blob })
    }

    pub fn scenes(&self) -> impl Iterator<Item = &SceneInfo> {
        self.scenes.iter().map(|s| &s.info)
    }
}

pub fn router(catalog: Arc<Catalog>) -> Router {
    Router::new()
        .route("/scenes", get(list_scenes))
        .route("/encode", post(encode))
        .route("/simulate", post(simulate))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(catalog)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<PromptError> for ApiError {
    fn from(e: PromptError) -> Self {
        let status = match e {
            PromptError::OutOfFrame { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

fn png_base64(img: &RgbImage) -> anyhow::Result<String> {
    Ok(BASE64.encode(img.encode_png()?))
}

/// `n` frame indices spread evenly from the first frame to the last.
pub fn tile_frames(frames: u32, n: usize) -> Vec<u32> {
    let last = frames as usize - 1;
    let n = n.clamp(1, frames as usize);
    if n == 1 {
        return vec![last as u32];
    }
    (0..n).map(|i| ((i * last) as f64 / (n - 1) as f64).round() as u32).collect()
}

fn strip(frames: &[RgbImage], tiles: &[u32]) -> Result<String, ApiError> {
    let picked: Vec<RgbImage> = tiles.iter().map(|&t| frames[t as usize].clone()).collect();
    let img = RgbImage::hstack(&picked).ok_or_else(|| ApiError::internal("empty strip"))?;
    png_base64(&img).map_err(ApiError::internal)
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request: {e}")))
}

fn tiles_or_default(tiles: Option<usize>) -> Result<usize, ApiError> {
    match tiles.unwrap_or(DEFAULT_TILES) {
        n @ 1..=MAX_TILES => Ok(n),
        n => Err(ApiError::bad_request(format!("tiles {n} outside 1..={MAX_TILES}"))),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn list_scenes(State(catalog): State<Arc<Catalog>>) -> Json<Vec<SceneInfo>> {
    Json(catalog.scenes().cloned().collect())
}

#[derive(Debug, Deserialize)]
struct EncodeRequest {
    #[serde(flatten)]
    prompt: PromptSpec,
    #[serde(default)]
    tiles: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub prompt: PromptSpec,
    pub dims: VideoDims,
    pub preview_dims: VideoDims,
    /// Frame index of each strip tile.
    pub tiles: Vec<u32>,
    pub strip_png: String,
    /// Peak `[x, y]` of each tile in full-frame pixels; empty for global
    /// prompts.
    pub argmax: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<[f32; 3]>,
}

fn encode_preview(catalog: &Catalog, req: EncodeRequest) -> Result<EncodeResponse, ApiError> {
    let tiles = tile_frames(catalog.preview.frames(), tiles_or_default(req.tiles)?);
    for l in req.prompt.locals() {
        l.check_in(&catalog.full)?;
    }
    let scaled = scale_prompt(&req.prompt, catalog.scale)?;
    let tensor = encode_spec(&scaled, &catalog.preview, &catalog.blob).map_err(ApiError::internal)?;
    let (argmax, channels) = match &scaled {
        PromptSpec::Global(g) => (Vec::new(), Some(global_channels(g))),
        _ => {
            let peaks = tiles
                .iter()
                .map(|&t| {
                    let (col, row) = tensor.argmax(t as usize, 0);
                    [col as f64 / catalog.scale, row as f64 / catalog.scale]
                })
                .collect();
            (peaks, None)
        }
    };
    Ok(EncodeResponse {
        prompt: req.prompt,
        dims: catalog.full,
        preview_dims: catalog.preview,
        strip_png: strip(&frame_images(&tensor), &tiles)?,
        tiles,
        argmax,
        channels,
    })
}

async fn encode(State(catalog): State<Arc<Catalog>>, body: Bytes) -> Result<Json<EncodeResponse>, ApiError> {
    let req: EncodeRequest = parse(&body)?;
    blocking(move || encode_preview(&catalog, req)).await.map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    scene: String,
    force: f64,
    /// Screen angle of the push or wind at the driven object.
    angle: f64,
    /// Replaces the pushed ball's material.
    #[serde(default)]
    material: Option<BallMaterial>,
    /// Replaces the scene seed (wind gusts).
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tiles: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub scene: String,
    /// The dataset prompt equivalent to this request.
    pub force: ForcePrompt,
    /// Ground-plane direction the screen angle maps to, degrees.
    pub world_angle: f64,
    pub dims: VideoDims,
    pub preview_dims: VideoDims,
    pub tiles: Vec<u32>,
    pub strip_png: String,
    /// The driven object's projected center per frame, full-frame pixels.
    pub trajectory: Vec<TrajectoryPoint>,
    pub path_length_px: f64,
    pub distance_px: f64,
}

/// Ground direction whose projection at `anchor` points along `angle` on
/// screen.
fn ground_direction(camera: &CameraModel, anchor: DVec3, angle: Angle) -> Option<f64> {
    let anchor = DVec3::new(anchor.x, anchor.y, 0.0);
    let (px, py) = camera.project_point(anchor).ok()?;
    let (sx, sy) = angle.screen_step();
    let q = camera.unproject_to_ground(px + sx, py + sy)?;
    let d = (q - anchor).truncate();
    (d.length() > 1e-12).then(|| d.y.atan2(d.x).to_degrees().rem_euclid(360.0))
}

/// The object a request drives and its world position in one frame.
fn driven_position(spec: &SceneSpec, state: &FrameState) -> Option<DVec3> {
    match spec {
        SceneSpec::Ball(s) => state.balls.get(s.target).map(|b| b.position),
        SceneSpec::Flag(_) => state.flags.first().map(|f| f.centroid()),
        SceneSpec::Plant(_) => state.chain.as_ref().map(|c| c.tip()),
    }
}

fn simulate_preview(catalog: &Catalog, req: SimulateRequest) -> Result<SimulateResponse, ApiError> {
    let scene = catalog
        .scenes
        .iter()
        .find(|s| s.info.id == req.scene)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scene {:?}", req.scene)))?;
    let tiles = tile_frames(catalog.preview.frames(), tiles_or_default(req.tiles)?);
    let force = Magnitude::new(req.force)?;
    let angle = Angle::from_degrees(req.angle)?;
    let camera = scene.info.camera;
    let mut spec = scene.spec.clone();
    let anchor = match &spec {
        SceneSpec::Ball(s) => s.balls[s.target].position,
        SceneSpec::Flag(s) => s.camera.target,
        SceneSpec::Plant(s) => plant_contact_point(s.contact),
    };
    let world_angle = ground_direction(&camera, anchor, angle)
        .ok_or_else(|| ApiError::bad_request("direction does not meet the ground in front of the camera"))?;
    match &mut spec {
        SceneSpec::Ball(s) => {
            s.force_angle = world_angle;
            s.force_magnitude = force.get();
            if let Some(m) = req.material {
                s.balls[s.target].material = m;
            }
        }
        SceneSpec::Flag(s) => {
            s.wind_angle = world_angle;
            s.wind_speed = force.get();
            if let Some(seed) = req.seed {
                s.seed = seed;
            }
        }
        SceneSpec::Plant(s) => {
            s.force_angle = world_angle;
            s.force_magnitude = force.get();
        }
    }
    if req.material.is_some() && !matches!(spec, SceneSpec::Ball(_)) {
        return Err(ApiError::bad_request("material applies to ball scenes only"));
    }
    let prompt = force_prompt(&spec, &catalog.full).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let realized = realize_spec(&spec, &catalog.preview).map_err(ApiError::internal)?;
    let trajectory = realized
        .states
        .iter()
        .enumerate()
        .map(|(frame, state)| {
            let p = driven_position(&spec, state).ok_or_else(|| ApiError::internal("scene lost its driven object"))?;
            let (x, y) = camera.project_point(p).map_err(ApiError::internal)?;
            Ok(TrajectoryPoint { frame: frame as u32, x, y })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    let path_length_px = trajectory.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum();
    let (first, last) = (trajectory[0], trajectory[trajectory.len() - 1]);
    Ok(SimulateResponse {
        scene: req.scene,
        force: prompt,
        world_angle,
        dims: catalog.full,
        preview_dims: catalog.preview,
        strip_png: strip(&realized.frames, &tiles)?,
        tiles,
        distance_px: (last.x - first.x).hypot(last.y - first.y),
        path_length_px,
        trajectory,
    })
}

async fn simulate(State(catalog): State<Arc<Catalog>>, body: Bytes) -> Result<Json<SimulateResponse>, ApiError> {
    let req: SimulateRequest = parse(&body)?;
    blocking(move || simulate_preview(&catalog, req)).await.map(Json)
}

pub fn run(args: &ServeArgs, threads: Option<usize>) -> anyhow::Result<Outcome> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    if !(args.preview_scale > 0.0 && args.preview_scale <= 1.0) {
        return Err(crate::UsageError::invalid(format!("--preview-scale {} outside (0, 1]", args.preview_scale)));
    }
    let catalog = Arc::new(Catalog::new(args.preview_scale)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr).await.with_context(|| format!("binding {}", args.addr))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(catalog))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        anyhow::Ok(())
    })?;
    Ok(Outcome::Success)
}
