//! Command-line experiment runner.
//!
//! Every subcommand takes `--config PATH` (strict TOML) plus optional
//! `--seed N`, `--out DIR`, and `--deceptive`. Exit codes: 0 success,
//! 2 usage/config, 3 input format, 4 runtime.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use assistive_signals::error::Error;
use assistive_signals::experiment::{run_experiment, CliOverrides, JobKind};

#[derive(Parser)]
#[command(name = "asig", version, about = "Assistive signal generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// Experiment config file (TOML; unknown keys are rejected).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory that receives run directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Flip the signal mode (assistive <-> deceptive) where applicable.
    #[arg(long)]
    deceptive: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the reference CNN on a dataset and save a checkpoint.
    TrainRef(JobArgs),
    /// Replace each dataset image with its assistive (hardened) version.
    Harden(JobArgs),
    /// Accuracy tables under FGSM/PGD at several budgets.
    AttackEval(JobArgs),
    /// Train a location-invariant 2D assistive patch.
    Patch2d(JobArgs),
    /// Optimize a full or masked 3D texture through the renderer.
    Texture3d(JobArgs),
    /// Optimize a rectangular UV patch through the renderer.
    Patch3d(JobArgs),
    /// Classify the object over a pose/lighting grid.
    Sweep(JobArgs),
    /// Cross-model transferability matrix of optimized textures.
    Transfer(JobArgs),
    /// Render a textured mesh from explicit views.
    Render(JobArgs),
}

impl Command {
    fn split(self) -> (JobKind, JobArgs) {
        match self {
            Command::TrainRef(a) => (JobKind::TrainRef, a),
            Command::Harden(a) => (JobKind::Harden, a),
            Command::AttackEval(a) => (JobKind::AttackEval, a),
            Command::Patch2d(a) => (JobKind::Patch2d, a),
            Command::Texture3d(a) => (JobKind::Texture3d, a),
            Command::Patch3d(a) => (JobKind::Patch3d, a),
            Command::Sweep(a) => (JobKind::Sweep, a),
            Command::Transfer(a) => (JobKind::Transfer, a),
            Command::Render(a) => (JobKind::Render, a),
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Format(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let config_text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let overrides = CliOverrides {
        seed: args.seed,
        out_dir: args.out,
        deceptive: args.deceptive,
    };
    match run_experiment(&config_text, Some(kind), &overrides) {
        Ok((record, dir)) => {
            println!("run complete: {}", dir.display());
            println!("artifacts: {}", record.artifacts.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", kind.as_str());
            ExitCode::from(exit_code_for(&e))
        }
    }
}
