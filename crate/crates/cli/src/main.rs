//! `centaur`: runs the pipeline stages from a JSON config and writes
//! artifacts that embed the resolved config.
//!
//! Exit codes: 0 success, 1 invalid config or data, 2 usage error, 3 numerical
//! failure.

mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::BaselineKind;

#[derive(Debug, Parser)]
#[command(name = "centaur", version, about = "Embedding readouts of human choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Run config, or an artifact whose embedded config should be re-run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render every trial of the dataset as a prompt.
    Prompts(Common),
    /// Write a synthetic dataset and embedding store.
    EmbedSynth(Common),
    /// Nested cross-validated readout fit.
    Fit(Common),
    /// Readout fit with per-participant random effects.
    FitRe(Common),
    /// Cross-validated baseline model.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<BaselineKind>,
    },
    /// Simulate choices from a fit report's test predictions and score regret.
    Simulate(Common),
    /// Horizon-task choice curves and informative-choice rates.
    Curves(Common),
    /// Indifference points of experiential-symbolic choices.
    Indifference(Common),
    /// Random-effects Bayesian model selection.
    Bms {
        #[command(flatten)]
        common: Common,
        /// CSV of per-participant NLLs, one column per model.
        #[arg(long)]
        evidence: Option<PathBuf>,
    },
    /// Fit on training tasks, evaluate on a hold-out task.
    Transfer(Common),
    /// Tabulate fit reports by test NLL.
    Report(Common),
}

/// Why a run failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure::Invalid(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<centaur::Error> for Failure {
    fn from(e: centaur::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
