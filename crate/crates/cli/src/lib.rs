//! Command-line front end for the `ballpit` sampler: data ingestion,
//! configuration, sampler and oracle runs, and experiment reproduction.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod reproduce;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ballpit", version, about = "Ball pit ensemble sampler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the ball ensemble and write draws.csv, summary.json and density.csv.
    Run(config::ExperimentArgs),
    /// Write a closed-form or Metropolis reference summary.json.
    Oracle(commands::OracleArgs),
    /// Generate a synthetic dataset, one value per line.
    Simulate(commands::SimulateArgs),
    /// Rerun a reference experiment and write a comparison table.
    Reproduce(reproduce::ReproduceArgs),
}

/// Executes one parsed command, returning a line for standard output.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Run(args) => {
            let dir = commands::cmd_run(args)?;
            Ok(format!("wrote {}", dir.display()))
        }
        Command::Oracle(args) => {
            let dir = commands::cmd_oracle(args)?;
            Ok(format!("wrote {}", dir.join("summary.json").display()))
        }
        Command::Simulate(args) => {
            let path = commands::cmd_simulate(args)?;
            Ok(format!("wrote {}", path.display()))
        }
        Command::Reproduce(args) => {
            let (dir, text) = reproduce::cmd_reproduce(args)?;
            Ok(format!("{text}\nwrote {}", dir.display()))
        }
    }
}
