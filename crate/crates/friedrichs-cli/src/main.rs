//! `friedrichs`: config-driven checks, reductions and solves.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use tasks::RunArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{task}: {source}")]
    Model {
        task: &'static str,
        #[source]
        source: friedrichs::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "friedrichs", version, about = "Admissibility checks and upwind solves for first-order symmetric systems")]
struct Cli {
    #[command(subcommand)]
    task: Task,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run even when the boundary conditions are not admissible.
    #[arg(long)]
    force: bool,
    /// Seed for the random cone directions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Task {
    /// Classify the system and test the boundary conditions.
    Check(Common),
    /// Tabulate the coefficients of a reduced second-order problem.
    Reduce(Common),
    /// Solve the initial-boundary value problem.
    Solve(Common),
    /// Apply the retarded or advanced Green operator to the forcing.
    Green(Common),
    /// Measure observed orders against a closed-form solution.
    Converge(Common),
    /// Test the corner compatibility conditions of the initial data.
    Compat(Common),
}

type Runner = fn(&RunArgs) -> Result<bool, CliError>;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, f): (Common, Runner) = match cli.task {
        Task::Check(c) => (c, tasks::check),
        Task::Reduce(c) => (c, tasks::reduce),
        Task::Solve(c) => (c, tasks::solve),
        Task::Green(c) => (c, tasks::green),
        Task::Converge(c) => (c, tasks::converge),
        Task::Compat(c) => (c, tasks::compat),
    };
    let config_text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", common.config.display())))?;
    let args = RunArgs {
        config_text,
        out: common.out,
        force: common.force,
        seed: common.seed,
    };
    tasks::prepare(&args)?;
    f(&args)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                _ => 3,
            })
        }
    }
}
