//! Batch front end: configuration, subcommands and artifact emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

use clap::{Parser, Subcommand};

pub use commands::{diagnose_cmd, figures_cmd, rate_cmd, simulate_cmd, Outcome, RateArgs};
pub use config::{RunArgs, RunConfig};
pub use error::{CliError, CliResult};
pub use verify::verify_cmd;

#[derive(Parser, Debug)]
#[command(name = "fiberlay", version, about = "Fiber lay-down simulation and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate paths; writes trajectory CSVs and a manifest.
    Simulate(RunArgs),
    /// Four-sigma sweep for d = 2 or 3 with a gnuplot script.
    Figures(RunArgs),
    /// Identity and structure suite; writes a JSON report.
    Verify(RunArgs),
    /// Mixing series and stationarity audit.
    Diagnose(RunArgs),
    /// Hypocoercive rate, its optimal sigma and the coercivity sub-constants.
    Rate(RateArgs),
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Figures(a) => figures_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Diagnose(a) => diagnose_cmd(a),
        Command::Rate(a) => rate_cmd(a),
    }
}
