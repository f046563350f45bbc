//! Command line front end. Exit codes: 0 clean, 1 per-item failures were
//! skipped (non-strict mode), 2 hard error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::evaluate::EvaluateInputs;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "trajlens", version, about = "Trajectory quality analysis")]
struct Cli {
    /// Config TOML path; falls back to $TRAJLENS_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Abort on the first per-item error instead of reporting and skipping.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw agent logs into canonical trajectory files.
    Ingest(IngestArgs),
    /// Detect defects, calibrate risks, and emit scorecards.
    Analyze(AnalyzeArgs),
    /// Fit calibration models on the calibration split.
    Calibrate(CalibrateArgs),
    /// Compute evaluation tables from scorecards and annotations.
    Evaluate(EvaluateArgs),
    /// Generate labeled synthetic trajectories.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Adapter name, e.g. fixture.
    #[arg(long, default_value = "fixture")]
    adapter: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Raw log files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Calibration model file; optional only for the hard_threshold method.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Canonical trajectory files.
    #[arg(required = true)]
    trajectories: Vec<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Annotation records, JSONL.
    #[arg(long)]
    annotations: PathBuf,
    /// Split assignment file; fitting refuses evaluation-split cases.
    #[arg(long)]
    split: PathBuf,
    #[arg(long, default_value = "models.json")]
    out: PathBuf,
    /// Canonical trajectory files from the calibration split.
    #[arg(required = true)]
    trajectories: Vec<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Scorecard JSON files.
    #[arg(long, required = true, num_args = 1..)]
    scorecards: Vec<PathBuf>,
    /// Annotation records, JSONL; required by label-based analyses.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Comma-separated list of analyses to run.
    #[arg(long, value_delimiter = ',', default_value = "metrics")]
    analyses: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec TOML; defaults apply when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Overrides the config seed when set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: &Cli) -> Result<usize, commands::CliError> {
    let cfg = RunConfig::resolve(cli.config.as_deref())?;
    let strict = cli.strict || cfg.strict;
    match &cli.command {
        Command::Ingest(a) => commands::ingest::run(&a.inputs, &a.adapter, &a.out, strict),
        Command::Analyze(a) => {
            commands::analyze::run(&a.trajectories, &cfg, a.model.as_deref(), &a.out, strict)
        }
        Command::Calibrate(a) => {
            commands::calibrate::run(&a.trajectories, &a.annotations, &a.split, &cfg, &a.out)
        }
        Command::Evaluate(a) => {
            let inputs = EvaluateInputs {
                scorecards: &a.scorecards,
                annotations: a.annotations.as_deref(),
                analyses: &a.analyses,
                out_dir: &a.out,
            };
            commands::evaluate::run(&inputs, &cfg)
        }
        Command::Synth(a) => {
            commands::synth::run(a.spec.as_deref(), a.count, a.seed.unwrap_or(cfg.seed), &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("completed with {failures} item failure(s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
