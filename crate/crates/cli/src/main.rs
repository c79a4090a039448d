mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::{CliError, Result};

/// Self-supervised encoder + quantum-inspired subset search intrusion
/// detection pipeline.
#[derive(Parser)]
#[command(name = "qids", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Common {
    /// Run configuration file (`key = value` lines, e.g. `qga.population = 20`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every random stream
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; also the default location of upstream artifacts
    #[arg(long, global = true, default_value = "qids-out")]
    out: PathBuf,
    /// Print machine-readable JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Extra `key=value` config overrides, applied after the file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-feature dataset
    Synth(commands::SynthArgs),
    /// Fit normalization on a raw CSV and write the encoded dataset
    Preprocess(commands::PreprocessArgs),
    /// Train the self-supervised encoder
    Pretrain(commands::PretrainArgs),
    /// Search embedding subsets and classifier hyperparameters, write the bundle
    Optimize(commands::OptimizeArgs),
    /// Score a bundle on held-out rows
    Evaluate(commands::EvaluateArgs),
    /// Merge evaluation records into one comparison table
    Report(commands::ReportArgs),
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    let ctx = commands::Context { out: cli.common.out.clone(), json: cli.common.json };
    match cli.command {
        Command::Synth(args) => commands::synth(&ctx, &mut cfg, args),
        Command::Preprocess(args) => commands::preprocess(&ctx, cfg, args),
        Command::Pretrain(args) => commands::pretrain(&ctx, cfg, args),
        Command::Optimize(args) => commands::optimize(&ctx, cfg, args),
        Command::Evaluate(args) => commands::evaluate(&ctx, args),
        Command::Report(args) => commands::report(&ctx, args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
