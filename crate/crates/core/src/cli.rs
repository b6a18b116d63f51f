//! Command-line front end.
//!
//! Exit codes: 0 success, 2 bad arguments or spec, 3 unreadable or invalid
//! data, 4 training failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ingest::{load_records, write_csv, PropertyRecord};
use crate::model::{load_checkpoint, ModelError, ModelKind};
use crate::protocol::{
    derive_seed, evaluate, fit_model, monte_carlo_cv, transfer_from_checkpoint, MetricsReport, ProtocolError, Tier,
    TrainConfig, TransferOptions, TransferReport,
};
use crate::synth::{generate_universe, UniverseSpec};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_TRAINING: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "appraisal", version, about = "Cross-city property appraisal with transferable networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic multi-city market.
    Synth {
        /// Universe spec (JSON). Defaults to a tier-1 source and a tier-3 target city.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train on one city and report held-out accuracy.
    Train {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "hft_hlf")]
        model: ModelKind,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        tier: u8,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Number of random 90/10 splits; a single split when omitted.
        #[arg(long)]
        cv: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Fine-tune a trained model on a new city with k records per residence.
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        tier: u8,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// Keep training the transferred layers instead of freezing them.
        #[arg(long)]
        unfreeze: bool,
        /// Also train a fresh model on the same records for comparison.
        #[arg(long)]
        compare_scratch: bool,
    },
    /// Score a checkpoint on a CSV.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Record of one invocation, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub config: Value,
    pub seed: u64,
    pub tool_version: String,
    pub duration_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelKind,
    pub tier: u8,
    pub config: TrainConfig,
    pub records: usize,
    pub dropped: usize,
    pub folds: Vec<MetricsReport>,
    #[serde(flatten)]
    pub mean: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferRunReport {
    pub tier: u8,
    pub config: TrainConfig,
    pub split_seed: u64,
    pub frozen_backbone: bool,
    #[serde(flatten)]
    pub result: TransferReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub city: String,
    pub records: usize,
    pub dropped: usize,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
    fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        let code = match &e {
            ProtocolError::InvalidConfig(_) => EXIT_USAGE,
            ProtocolError::NonFiniteLoss { .. } | ProtocolError::Model(ModelError::Neural(_)) => EXIT_TRAINING,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        ProtocolError::from(e).into()
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let started = Instant::now();
    match command {
        Command::Synth { spec, seed, out } => cmd_synth(spec, seed, &out, started),
        Command::Train { csv, model, tier, seed, out, cv, epochs } => {
            cmd_train(&csv, model, tier, seed, &out, cv, epochs, started)
        }
        Command::Transfer { source, target, k, tier, seed, out, epochs, unfreeze, compare_scratch } => {
            let options = TransferOptions { freeze_backbone: !unfreeze, compare_scratch };
            cmd_transfer(&source, &target, k, tier, seed, &out, epochs, options, started)
        }
        Command::Eval { ckpt, csv, out, seed } => cmd_eval(&ckpt, &csv, out.as_deref(), seed, started),
    }
}

fn tier_config(tier: u8, seed: u64, epochs: Option<usize>) -> TrainConfig {
    let tier = Tier::from_number(tier).expect("clap restricts tier to 1..=3");
    let config = TrainConfig::for_tier(tier, seed);
    match epochs {
        Some(e) => config.with_epochs(e),
        None => config,
    }
}

fn read_city(path: &Path) -> Result<(Vec<PropertyRecord>, usize), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let (records, report, parse_errors) =
        load_records(&bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(Failure::data(format!("{}: no valid rows", path.display())));
    }
    Ok((records, report.dropped() + parse_errors.len()))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn display(paths: &[&Path]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn write_manifest(
    out: &Path,
    command: &str,
    inputs: &[&Path],
    outputs: &[&Path],
    config: Value,
    seed: u64,
    started: Instant,
) -> Result<(), Failure> {
    let manifest = RunManifest {
        command: command.into(),
        inputs: display(inputs),
        outputs: display(outputs),
        config,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        duration_secs: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join(format!("{command}.manifest.json")), &manifest)
}

fn cmd_synth(spec_path: Option<PathBuf>, seed: Option<u64>, out: &Path, started: Instant) -> Result<(), Failure> {
    let mut spec = match &spec_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<UniverseSpec>(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => UniverseSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let universe = generate_universe(&spec).map_err(|e| Failure::usage(e.to_string()))?;
    prepare_out(out)?;
    let mut outputs = Vec::new();
    for (city, records) in &universe.records {
        let path = out.join(format!("{city}.csv"));
        let file = fs::File::create(&path).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        write_csv(records, file).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        outputs.push(path);
    }
    let truth = out.join("truth.json");
    write_json(&truth, &universe.truth)?;
    outputs.push(truth);
    let inputs: Vec<&Path> = spec_path.iter().map(PathBuf::as_path).collect();
    let output_refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    let config = serde_json::to_value(&spec).expect("spec serializes");
    write_manifest(out, "synth", &inputs, &output_refs, config, spec.seed, started)?;
    for p in &outputs {
        println!("{}", p.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    csv: &Path,
    kind: ModelKind,
    tier: u8,
    seed: u64,
    out: &Path,
    cv: Option<usize>,
    epochs: Option<usize>,
    started: Instant,
) -> Result<(), Failure> {
    if cv == Some(0) {
        return Err(Failure::usage("--cv must be at least 1"));
    }
    let config = tier_config(tier, seed, epochs);
    config.validate()?;
    let (records, dropped) = read_city(csv)?;
    let cv_report = monte_carlo_cv(&records, kind, &config, cv.unwrap_or(1))?;
    let (checkpoint, _) = fit_model(kind, &records, &config)?;
    prepare_out(out)?;
    let model_path = out.join("model.json");
    checkpoint.save(&model_path)?;
    let report = TrainReport {
        model: kind,
        tier,
        config: config.clone(),
        records: records.len(),
        dropped,
        folds: cv_report.folds,
        mean: cv_report.mean,
    };
    let report_path = out.join("train.report.json");
    write_json(&report_path, &report)?;
    let echo = json!({ "model": kind, "tier": tier, "cv": cv, "train": config });
    write_manifest(out, "train", &[csv], &[&model_path, &report_path], echo, seed, started)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_transfer(
    source: &Path,
    target: &Path,
    k: usize,
    tier: u8,
    seed: u64,
    out: &Path,
    epochs: Option<usize>,
    options: TransferOptions,
    started: Instant,
) -> Result<(), Failure> {
    if k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    let config = tier_config(tier, derive_seed(seed, 1), epochs);
    config.validate()?;
    let checkpoint = load_checkpoint(source).map_err(|e| Failure::data(format!("{}: {e}", source.display())))?;
    let (records, _) = read_city(target)?;
    let (result, tuned) = transfer_from_checkpoint(&checkpoint, &records, k, &config, seed, options)?;
    prepare_out(out)?;
    let model_path = out.join("transfer.model.json");
    tuned.save(&model_path)?;
    let report = TransferRunReport {
        tier,
        config: config.clone(),
        split_seed: seed,
        frozen_backbone: options.freeze_backbone,
        result,
    };
    let report_path = out.join("transfer.report.json");
    write_json(&report_path, &report)?;
    let echo = json!({
        "k": k,
        "tier": tier,
        "train": config,
        "freeze_backbone": options.freeze_backbone,
        "compare_scratch": options.compare_scratch,
    });
    write_manifest(out, "transfer", &[source, target], &[&model_path, &report_path], echo, seed, started)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn cmd_eval(ckpt: &Path, csv: &Path, out: Option<&Path>, seed: u64, started: Instant) -> Result<(), Failure> {
    let checkpoint = load_checkpoint(ckpt).map_err(|e| Failure::data(format!("{}: {e}", ckpt.display())))?;
    let (records, dropped) = read_city(csv)?;
    let metrics = evaluate(&checkpoint, &records)?;
    let report = EvalReport {
        city: checkpoint.vocab.city.clone(),
        records: records.len(),
        dropped,
        metrics,
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    if let Some(out) = out {
        prepare_out(out)?;
        let report_path = out.join("eval.report.json");
        write_json(&report_path, &report)?;
        write_manifest(out, "eval", &[ckpt, csv], &[&report_path], json!({}), seed, started)?;
    }
    println!("{text}");
    Ok(())
}
