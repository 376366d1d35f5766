//! `eval mass-study` and `eval audit`.

use std::path::PathBuf;

use anyhow::Context;
use clap::builder::PossibleValuesParser;
use clap::{Args, Subcommand};
use forceforge::dataset::read_manifest;
use forceforge::eval::{audit_distributions, AuditError, mass_study, AuditReport, FieldTest, MassStudyConfig};
use forceforge::scene::{dataset_plan, read_plan, sample_scene, PlanEntry, Scenario};
use forceforge::VideoDims;

use crate::{ablation_config, ensure_dir, parse_scenario, write_json, Outcome, ABLATIONS};

/// Simulator distances must match the closed-form stopping distance this
/// closely.
pub const ORACLE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(subcommand)]
    pub study: Study,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Study {
    /// Soccer vs bowling ball distance over a force ladder.
    MassStudy(MassStudyArgs),
    /// Goodness-of-fit tests of a plan's sampled distributions.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MassStudyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Repeats per (material, force, surface, color) cell.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeats: u32,
    /// Render scale relative to 480x720.
    #[arg(long, default_value_t = 0.25)]
    pub scale: f64,
    /// Output directory for the CSV and JSON report.
    #[arg(long, default_value = "mass_study")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    /// Plan file written by `plan`.
    #[arg(long, conflicts_with_all = ["dataset", "scenario"])]
    pub plan: Option<PathBuf>,
    /// Dataset root; its records are re-planned from their stored seeds.
    #[arg(long, conflicts_with = "scenario")]
    pub dataset: Option<PathBuf>,
    /// Plan in memory instead of reading one.
    #[arg(long, value_parser = parse_scenario, requires = "count")]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = PossibleValuesParser::new(ABLATIONS))]
    pub ablation: Vec<String>,
    /// Restrict to these fields; repeatable.
    #[arg(long)]
    pub field: Vec<String>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> anyhow::Result<Outcome> {
    match &args.study {
        Study::MassStudy(a) => run_mass_study(a),
        Study::Audit(a) => run_audit(a),
    }
}

fn run_mass_study(args: &MassStudyArgs) -> anyhow::Result<Outcome> {
    let config = MassStudyConfig { master_seed: args.seed, repeats: args.repeats as usize, scale: args.scale, ..Default::default() };
    let report = mass_study(&config)?;
    ensure_dir(&args.out)?;
    let csv = args.out.join("mass_study.csv");
    std::fs::write(&csv, report.csv()).with_context(|| format!("writing {}", csv.display()))?;
    write_json(&args.out.join("mass_study.json"), &report)?;
    print!("{}", report.table());
    let oracle_pass = report.oracle_max_rel_error < ORACLE_TOLERANCE;
    println!(
        "oracle: max relative error {:.2e} {}",
        report.oracle_max_rel_error,
        if oracle_pass { "PASS" } else { "FAIL" }
    );
    println!("wrote {}", csv.display());
    Ok(Outcome::from_pass(report.ordering_pass && report.monotone_pass() && oracle_pass))
}

/// Rebuilds plan entries from manifest seeds.
fn plan_from_dataset(root: &std::path::Path) -> anyhow::Result<Vec<PlanEntry>> {
    read_manifest(root)?
        .into_iter()
        .map(|r| {
            let spec = sample_scene(r.scenario, r.seed, &r.ablation);
            PlanEntry::for_spec(r.record_index, spec, r.dims, r.ablation).with_context(|| format!("re-planning {}", r.id))
        })
        .collect()
}

fn load_entries(args: &AuditArgs) -> anyhow::Result<Vec<PlanEntry>> {
    if let Some(path) = &args.plan {
        return Ok(read_plan(path)?);
    }
    if let Some(root) = &args.dataset {
        return plan_from_dataset(root);
    }
    match (args.scenario, args.count) {
        (Some(scenario), Some(count)) => {
            let ablation = ablation_config(&args.ablation)?;
            Ok(dataset_plan(scenario, count, args.seed, &ablation, &VideoDims::default())?)
        }
        _ => Err(crate::UsageError::missing("one of --plan, --dataset or --scenario with --count is required")),
    }
}

pub fn format_report(report: &AuditReport) -> String {
    let mut s = String::new();
    for f in &report.fields {
        let test = match &f.test {
            FieldTest::ChiSquare { statistic, dof, p_value } => format!("chi2={statistic:.3} dof={dof} p={p_value:.4}"),
            FieldTest::KolmogorovSmirnov { statistic, p_value } => format!("D={statistic:.5} p={p_value:.4}"),
            FieldTest::Degenerate { value } => format!("constant {value}"),
        };
        s.push_str(&format!(
            "{:<16} n={:<6} {:<28} {:<40} {}\n",
            f.field,
            f.n,
            f.expected,
            test,
            if f.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

fn run_audit(args: &AuditArgs) -> anyhow::Result<Outcome> {
    let entries = load_entries(args)?;
    let only = (!args.field.is_empty()).then_some(args.field.as_slice());
    let report = audit_distributions(&entries, only).map_err(|e| match e {
        AuditError::UnknownField(_) => crate::UsageError::invalid(e.to_string()),
        other => other.into(),
    })?;
    print!("{}", format_report(&report));
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(Outcome::from_pass(report.pass()))
}
