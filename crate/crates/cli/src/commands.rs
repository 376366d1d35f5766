//! Dataset commands: generate, plan, simulate, validate.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use clap::builder::PossibleValuesParser;
use clap::Args;
use forceforge::dataset::{
    upsert_manifest, validate_dataset, write_record_files, RecordContent, VideoRecord, GENERATOR_VERSION,
};
use forceforge::encode::BlobParams;
use forceforge::par;
use forceforge::pipeline::realize;
use forceforge::scene::{dataset_plan, sample_scene, write_plan, AblationConfig, PlanEntry, Scenario};
use forceforge::seed::derive_seed;
use forceforge::VideoDims;
use serde::Serialize;

use crate::{ablation_config, ensure_dir, parse_scenario, write_json, DimsArgs, Outcome, ABLATIONS};

pub const RUN_CONFIG: &str = "run_config.json";

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    /// Number of records.
    #[arg(long)]
    pub count: u64,
    /// Master seed; record `i` is drawn from a seed derived from it and `i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output root; created if missing. Existing records with the same ids
    /// are replaced.
    #[arg(long, default_value = "dataset")]
    pub out: PathBuf,
    /// Ablation to apply; repeatable.
    #[arg(long, value_parser = PossibleValuesParser::new(ABLATIONS))]
    pub ablation: Vec<String>,
    /// Also store each record's control tensor.
    #[arg(long)]
    pub materialize_control: bool,
    #[command(flatten)]
    pub dims: DimsArgs,
}

/// The resolved inputs of a `generate` run, stored next to the manifest.
/// Thread count and output location are deliberately absent: neither
/// changes the artifacts.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a> {
    pub command: &'static str,
    pub scenario: Scenario,
    pub count: u64,
    pub master_seed: u64,
    pub dims_overrides: &'a DimsArgs,
    pub dims: VideoDims,
    pub blob: BlobParams,
    pub ablation: AblationConfig,
    pub materialize_control: bool,
    pub generator_version: &'static str,
}

fn write_one(entry: &PlanEntry, args: &GenerateArgs, blob: BlobParams) -> anyhow::Result<String> {
    let realized = realize(entry)?;
    let record = VideoRecord::from_plan(entry, args.seed, realized.camera, blob, args.materialize_control);
    let control = args.materialize_control.then(|| record.control_tensor()).transpose()?;
    let states = realized.object_states();
    let content = RecordContent { frames: &realized.frames, states: &states, control: control.as_ref() };
    Ok(write_record_files(&record, &content, &args.out)?)
}

pub fn generate(args: &GenerateArgs) -> anyhow::Result<Outcome> {
    let (dims, blob) = args.dims.resolve()?;
    let ablation = ablation_config(&args.ablation)?;
    let plan = dataset_plan(args.scenario, args.count, args.seed, &ablation, &dims)?;
    ensure_dir(&args.out)?;

    let total = plan.len();
    let done = AtomicUsize::new(0);
    let results = par::map_slice(&plan, |entry| {
        let id = VideoRecord::id_for(entry.scenario(), entry.record_index);
        let result = write_one(entry, args, blob);
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        match &result {
            Ok(_) => log::info!("[{k}/{total}] {id}"),
            Err(e) => log::error!("[{k}/{total}] {id} failed: {e:#}"),
        }
        result.map_err(|_| id)
    });
    let (lines, failed): (Vec<_>, Vec<_>) = results.into_iter().partition(Result::is_ok);
    let lines: Vec<String> = lines.into_iter().map(Result::unwrap).collect();
    let failed: Vec<String> = failed.into_iter().map(|r| r.unwrap_err()).collect();

    upsert_manifest(&args.out, &lines)?;
    let config = RunConfig {
        command: "generate",
        scenario: args.scenario,
        count: args.count,
        master_seed: args.seed,
        dims_overrides: &args.dims,
        dims,
        blob,
        ablation,
        materialize_control: args.materialize_control,
        generator_version: GENERATOR_VERSION,
    };
    write_json(&args.out.join(RUN_CONFIG), &config)?;

    if failed.is_empty() {
        println!("wrote {} records to {}", lines.len(), args.out.display());
        Ok(Outcome::Success)
    } else {
        eprintln!("{} of {total} records failed: {}", failed.len(), failed.join(", "));
        Ok(Outcome::Failure)
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    #[arg(long)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = PossibleValuesParser::new(ABLATIONS))]
    pub ablation: Vec<String>,
    /// JSON-lines output file.
    #[arg(long, default_value = "plan.jsonl")]
    pub out: PathBuf,
    #[command(flatten)]
    pub dims: DimsArgs,
}

pub fn plan(args: &PlanArgs) -> anyhow::Result<Outcome> {
    let (dims, _) = args.dims.resolve()?;
    let ablation = ablation_config(&args.ablation)?;
    let plan = dataset_plan(args.scenario, args.count, args.seed, &ablation, &dims)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_plan(&plan, &args.out)?;
    println!("wrote {} plan entries to {}", plan.len(), args.out.display());
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record index within the plan of `--seed`.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    #[arg(long, value_parser = PossibleValuesParser::new(ABLATIONS))]
    pub ablation: Vec<String>,
    /// Write the record's files under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dims: DimsArgs,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    id: &'a str,
    prompt: &'a str,
    force: &'a forceforge::ForcePrompt,
    frames: usize,
    /// World position of each object in the first and last frame.
    start: Vec<[f64; 3]>,
    end: Vec<[f64; 3]>,
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<Outcome> {
    let (dims, blob) = args.dims.resolve()?;
    let ablation = ablation_config(&args.ablation)?;
    let spec = sample_scene(args.scenario, derive_seed(args.seed, args.index), &ablation);
    let entry = PlanEntry::for_spec(args.index, spec, dims, ablation)?;
    let realized = realize(&entry)?;
    let record = VideoRecord::from_plan(&entry, args.seed, realized.camera, blob, false);
    let states = realized.object_states();
    let last = realized.frames.len() as u32 - 1;
    let at = |frame: u32| states.iter().filter(|s| s.frame == frame).map(|s| s.position.to_array()).collect::<Vec<_>>();
    let summary = SimulateSummary {
        id: &record.id,
        prompt: &record.prompt.text,
        force: &record.force,
        frames: realized.frames.len(),
        start: at(0),
        end: at(last),
    };
    println!("{}", serde_json::to_string(&summary)?);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let content = RecordContent { frames: &realized.frames, states: &states, control: None };
        write_record_files(&record, &content, out)?;
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Dataset root containing the manifest.
    pub root: PathBuf,
}

pub fn validate(args: &ValidateArgs) -> anyhow::Result<Outcome> {
    let report = validate_dataset(&args.root).with_context(|| format!("validating {}", args.root.display()))?;
    for f in &report.findings {
        let id = f.id.as_deref().unwrap_or("-");
        let path = f.path.as_deref().map(Path::display);
        match path {
            Some(p) => println!("{id}: {p}: {}", f.message),
            None => println!("{id}: {}", f.message),
        }
    }
    println!("checked {} records, {} findings", report.records_checked, report.findings.len());
    Ok(Outcome::from_pass(report.is_clean()))
}
