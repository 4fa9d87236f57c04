//! Batch front door: parses an experiment config file, dispatches to the
//! library, and writes reports plus a run manifest.
//!
//! Exit codes: 0 success, 2 config error, 3 experiment error (bandwidth or
//! degeneracy), 4 I/O error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qareg_core::CoreError;

#[derive(Parser)]
#[command(
    name = "qareg",
    version,
    about = "Kernel regression experiments for Hilbert-space-valued time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a stationary sample and write it as CSV.
    Simulate(RunArgs),
    /// Evaluate the kernel regression estimator at query points.
    Estimate(RunArgs),
    /// Run the replicated asymptotic-normality experiment.
    Clt(RunArgs),
    /// Run the replicated variance-convergence experiment.
    Variance(RunArgs),
    /// Check the quasi-association covariance inequality on random probes.
    QaCheck(RunArgs),
    /// Evaluate the rate conditions over an n-schedule.
    Rates(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML config file for this run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap the number of worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Clt(a) => ("clt", a),
        Command::Variance(a) => ("variance", a),
        Command::QaCheck(a) => ("qa-check", a),
        Command::Rates(a) => ("rates", a),
    };

    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("qareg: could not configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Clt(a) => commands::clt::run(a),
        Command::Variance(a) => commands::variance::run(a),
        Command::QaCheck(a) => commands::qa::run(a),
        Command::Rates(a) => commands::rates::run(a),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qareg {name}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 = config error, 3 = experiment error, 4 = I/O error.
fn exit_code(err: &CoreError) -> u8 {
    match err {
        CoreError::Io(_) | CoreError::Csv(_) => 4,
        CoreError::Experiment(_)
        | CoreError::NoNeighbors { .. }
        | CoreError::DegenerateVariance
        | CoreError::Selection(_)
        | CoreError::Convergence(_) => 3,
        _ => 2,
    }
}
