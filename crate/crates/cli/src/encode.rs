//! `encode`: force prompt to control tensor, with optional file export.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use forceforge::encode::{
    blob_center, encode_global, encode_local, encode_multi, global_channels, write_fpct, write_png_frames, BlobParams,
    ControlTensor,
};
use forceforge::dataset::CONTROL_FILE;
use forceforge::{GlobalForcePrompt, LocalForcePrompt, MultiForcePrompt, PromptError, VideoDims};
use serde::Serialize;

use crate::{ensure_dir, write_json, DimsArgs, Outcome, PromptSpec, UsageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptKind {
    Global,
    Local,
    Multi,
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    /// Prompt shape; inferred from `--prompts` when omitted there.
    #[arg(long = "type", value_enum)]
    pub kind: Option<PromptKind>,
    /// Magnitude in [0, 1]; repeat once per force for `multi`.
    #[arg(long, allow_negative_numbers = true)]
    pub force: Vec<f64>,
    /// Screen angle in degrees, 0 = right, 90 = up; repeatable.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: Vec<f64>,
    /// Poke column in pixels of the unscaled frame; repeatable.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Vec<f64>,
    /// Poke row in pixels of the unscaled frame; repeatable.
    #[arg(long, allow_negative_numbers = true)]
    pub y: Vec<f64>,
    /// Read the prompt from a JSON prompt file instead of flags.
    #[arg(long, conflicts_with_all = ["force", "angle", "x", "y"])]
    pub prompts: Option<PathBuf>,
    /// Directory for the exported tensor and prompt file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export one PNG per frame.
    #[arg(long, requires = "out")]
    pub png: bool,
    #[command(flatten)]
    pub dims: DimsArgs,
}

fn one(values: &[f64], flag: &str, kind: &str) -> anyhow::Result<f64> {
    match values {
        [v] => Ok(*v),
        [] => Err(UsageError::missing(format!("--type {kind} requires {flag}"))),
        _ => Err(UsageError::invalid(format!("--type {kind} takes a single {flag}"))),
    }
}

fn prompt_error(e: PromptError) -> anyhow::Error {
    UsageError::invalid(e.to_string())
}

/// Builds the prompt from flags, in unscaled pixel coordinates.
pub fn prompt_from_flags(args: &EncodeArgs) -> anyhow::Result<PromptSpec> {
    let kind = args.kind.ok_or_else(|| UsageError::missing("--type is required unless --prompts is given"))?;
    match kind {
        PromptKind::Global => {
            if !args.x.is_empty() || !args.y.is_empty() {
                return Err(UsageError::invalid("--type global takes no --x/--y"));
            }
            let g = GlobalForcePrompt::new(one(&args.force, "--force", "global")?, one(&args.angle, "--angle", "global")?)
                .map_err(prompt_error)?;
            Ok(PromptSpec::Global(g))
        }
        PromptKind::Local => {
            let l = LocalForcePrompt::new(
                one(&args.x, "--x", "local")?,
                one(&args.y, "--y", "local")?,
                one(&args.force, "--force", "local")?,
                one(&args.angle, "--angle", "local")?,
            )
            .map_err(prompt_error)?;
            Ok(PromptSpec::Local(l))
        }
        PromptKind::Multi => {
            let n = args.x.len();
            if n == 0 {
                return Err(UsageError::missing("--type multi requires at least one --x --y --force --angle group"));
            }
            if [args.y.len(), args.force.len(), args.angle.len()].iter().any(|&m| m != n) {
                return Err(UsageError::invalid("--type multi needs the same number of --x, --y, --force and --angle"));
            }
            let forces = (0..n)
                .map(|i| LocalForcePrompt::new(args.x[i], args.y[i], args.force[i], args.angle[i]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(prompt_error)?;
            Ok(PromptSpec::Multi { forces: MultiForcePrompt::new(forces).map_err(prompt_error)? })
        }
    }
}

pub fn read_prompt_file(path: &std::path::Path, kind: Option<PromptKind>) -> anyhow::Result<PromptSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: PromptSpec =
        serde_json::from_str(&text).map_err(|e| UsageError::invalid(format!("{}: {e}", path.display())))?;
    let actual = match spec {
        PromptSpec::Global(_) => PromptKind::Global,
        PromptSpec::Local(_) => PromptKind::Local,
        PromptSpec::Multi { .. } => PromptKind::Multi,
    };
    if kind.is_some_and(|k| k != actual) {
        return Err(UsageError::invalid(format!("{} holds a {actual:?} prompt, not {:?}", path.display(), kind.unwrap())));
    }
    Ok(spec)
}

/// Rescales pixel anchors from unscaled to scaled coordinates.
pub fn scale_prompt(spec: &PromptSpec, scale: f64) -> Result<PromptSpec, PromptError> {
    let s = |l: &LocalForcePrompt| LocalForcePrompt::new(l.x() * scale, l.y() * scale, l.force.get(), l.angle.degrees());
    Ok(match spec {
        PromptSpec::Global(g) => PromptSpec::Global(*g),
        PromptSpec::Local(l) => PromptSpec::Local(s(l)?),
        PromptSpec::Multi { forces } => {
            PromptSpec::Multi { forces: MultiForcePrompt::new(forces.forces().iter().map(s).collect::<Result<_, _>>()?)? }
        }
    })
}

/// Encodes a prompt whose anchors are already in `dims` coordinates.
pub fn encode_spec(spec: &PromptSpec, dims: &VideoDims, blob: &BlobParams) -> Result<ControlTensor, forceforge::encode::EncodeError> {
    match spec {
        PromptSpec::Global(g) => encode_global(g, dims),
        PromptSpec::Local(l) => encode_local(l, dims, blob),
        PromptSpec::Multi { forces } => encode_multi(forces, dims, blob),
    }
}

#[derive(Serialize)]
struct Summary {
    kind: &'static str,
    dims: VideoDims,
    #[serde(skip_serializing_if = "Option::is_none")]
    channels: Option<[f32; 3]>,
    /// Peak pixel `[x, y]` of the final frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    final_frame_argmax: Option<[usize; 2]>,
    /// Analytic blob centers in the final frame, one per force.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    final_centers: Vec<[f64; 2]>,
}

pub fn run(args: &EncodeArgs) -> anyhow::Result<Outcome> {
    let (dims, blob) = args.dims.resolve()?;
    let spec = match &args.prompts {
        Some(path) => read_prompt_file(path, args.kind)?,
        None => prompt_from_flags(args)?,
    };
    let scaled = scale_prompt(&spec, args.dims.scale).map_err(prompt_error)?;
    for l in scaled.locals() {
        l.check_in(&dims).map_err(prompt_error)?;
    }
    let tensor = encode_spec(&scaled, &dims, &blob)?;
    let last = dims.frames() - 1;
    let summary = match &scaled {
        PromptSpec::Global(g) => Summary {
            kind: "global",
            dims,
            channels: Some(global_channels(g)),
            final_frame_argmax: None,
            final_centers: Vec::new(),
        },
        other => {
            let (col, row) = tensor.argmax(last as usize, 0);
            Summary {
                kind: if matches!(other, PromptSpec::Local(_)) { "local" } else { "multi" },
                dims,
                channels: None,
                final_frame_argmax: Some([col, row]),
                final_centers: other.locals().iter().map(|l| blob_center(l, &dims, last).into()).collect(),
            }
        }
    };
    println!("{}", serde_json::to_string(&summary)?);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_fpct(&tensor, &out.join(CONTROL_FILE))?;
        write_json(&out.join("prompt.json"), &spec)?;
        if args.png {
            write_png_frames(&tensor, &out.join("frames"))?;
        }
    }
    Ok(Outcome::Success)
}
