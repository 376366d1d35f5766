//! Command-line front end for the forceforge dataset engine.
//!
//! Exit codes: `0` success, `1` a run or check failed, `2` invalid arguments.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use forceforge::encode::BlobParams;
use forceforge::scene::{AblationConfig, Scenario};
use forceforge::{GlobalForcePrompt, LocalForcePrompt, MultiForcePrompt, VideoDims};
use serde::{Deserialize, Serialize};

pub mod commands;
pub mod encode;
pub mod eval;
pub mod serve;

#[derive(Debug, Parser)]
#[command(name = "forceforge", version, about = "Force-prompt dataset engine")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "FORCEFORGE_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub parallelism: Option<u16>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan, simulate, render and write a dataset.
    Generate(commands::GenerateArgs),
    /// Write a dataset plan as JSON lines without rendering anything.
    Plan(commands::PlanArgs),
    /// Simulate and render a single planned record.
    Simulate(commands::SimulateArgs),
    /// Encode a force prompt into a control tensor.
    Encode(encode::EncodeArgs),
    /// Run the mass study or the distribution audit.
    Eval(eval::EvalArgs),
    /// Check a dataset directory against its manifest.
    Validate(commands::ValidateArgs),
    /// Serve the preview HTTP API.
    Serve(serve::ServeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Plan(_) => "plan",
            Command::Simulate(_) => "simulate",
            Command::Encode(_) => "encode",
            Command::Eval(_) => "eval",
            Command::Validate(_) => "validate",
            Command::Serve(_) => "serve",
        }
    }
}

/// Resolution and timing overrides shared by every rendering command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DimsArgs {
    /// Frames per clip.
    #[arg(long)]
    pub frames: Option<u32>,
    /// Frame height in pixels, before scaling.
    #[arg(long)]
    pub height: Option<u32>,
    /// Frame width in pixels, before scaling.
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub fps: Option<u32>,
    /// Resolution multiplier applied after the overrides; blob sizes scale
    /// with it.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

impl DimsArgs {
    pub fn resolve(&self) -> anyhow::Result<(VideoDims, BlobParams)> {
        let d = VideoDims::default();
        let dims = VideoDims::new(
            self.frames.unwrap_or(d.frames()),
            self.height.unwrap_or(d.height()),
            self.width.unwrap_or(d.width()),
            self.fps.unwrap_or(d.fps()),
        )
        .and_then(|dims| dims.scaled(self.scale))
        .map_err(|e| UsageError::invalid(e.to_string()))?;
        if dims.frames() < 2 {
            return Err(UsageError::invalid("clips need at least 2 frames"));
        }
        let blob = BlobParams::default().scaled(self.scale).map_err(|e| UsageError::invalid(e.to_string()))?;
        Ok((dims, blob))
    }
}

pub const ABLATIONS: [&str; 4] = ["single-flag", "single-background", "no-distractors", "drop-wind-keywords"];

pub fn ablation_config(names: &[String]) -> anyhow::Result<AblationConfig> {
    let mut cfg = AblationConfig::default();
    for name in names {
        cfg.enable(name).map_err(UsageError::invalid)?;
    }
    Ok(cfg)
}

pub fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

/// The prompt-parameter file format shared by `encode --prompts` and the
/// serve API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptSpec {
    Global(GlobalForcePrompt),
    Local(LocalForcePrompt),
    Multi { forces: MultiForcePrompt },
}

impl PromptSpec {
    /// Pixel-anchored forces; empty for global prompts.
    pub fn locals(&self) -> &[LocalForcePrompt] {
        match self {
            PromptSpec::Global(_) => &[],
            PromptSpec::Local(l) => std::slice::from_ref(l),
            PromptSpec::Multi { forces } => forces.forces(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The command ran but its checks failed.
    Failure,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Failure => ExitCode::from(1),
        }
    }
}

/// Bad arguments; reported with usage text and exit code 2.
#[derive(Debug)]
pub struct UsageError {
    pub kind: ErrorKind,
    pub message: String,
}

impl UsageError {
    pub fn invalid(message: impl Into<String>) -> anyhow::Error {
        UsageError { kind: ErrorKind::ValueValidation, message: message.into() }.into()
    }

    pub fn missing(message: impl Into<String>) -> anyhow::Error {
        UsageError { kind: ErrorKind::MissingRequiredArgument, message: message.into() }.into()
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let threads = cli.parallelism.map(usize::from);
    match cli.command {
        Command::Serve(args) => serve::run(&args, threads),
        command => with_threads(threads, move || dispatch(command)),
    }
}

fn dispatch(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Generate(a) => commands::generate(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Encode(a) => encode::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Serve(_) => unreachable!("handled by run"),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> anyhow::Result<R> + Send) -> anyhow::Result<R> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> anyhow::Result<R> + Send) -> anyhow::Result<R> {
    f()
}

/// Parses, runs and maps the result onto the exit-code contract.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    init_logging(cli.quiet);
    let name = cli.command.name();
    match run(cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => match e.downcast::<UsageError>() {
            Ok(usage) => {
                let mut root = Cli::command();
                root.build();
                let sub = root.find_subcommand_mut(name).expect("known subcommand");
                sub.error(usage.kind, usage.message).exit()
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

fn init_logging(quiet: bool) {
    let default = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .try_init();
}

pub(crate) fn write_json(path: &std::path::Path, value: &impl Serialize) -> anyhow::Result<()> {
    use anyhow::Context;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn ensure_dir(path: &std::path::Path) -> anyhow::Result<PathBuf> {
    use anyhow::Context;
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(path.to_path_buf())
}
