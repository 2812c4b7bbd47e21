//! Command-line front end for the crowdlab toolkit.
//!
//! Five subcommands cover the batch workflows: `solve` for equilibrium
//! strategies, `replicate` for the published-value checks, `simulate` and
//! `sweep` for Monte Carlo runs with optional decision logs, and `analyze`
//! for logistic-regression fits on those logs.

pub mod commands;
pub mod config;
pub mod reference;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, ReplicateArgs, SimulateArgs, SolveArgs, SweepArgs};
use config::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "crowdlab",
    version,
    about = "Threshold crowdfunding games: equilibria, aggregation metrics, simulation, inference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the symmetric non-trivial equilibrium of a crowdfunding game
    Solve(SolveArgs),
    /// Recompute all published derivable quantities and report pass/fail
    Replicate(ReplicateArgs),
    /// Run one Monte Carlo scenario (replications = 1 dumps a single trial)
    Simulate(SimulateArgs),
    /// Run a scenario grid and write aggregate reports
    Sweep(SweepArgs),
    /// Fit a logistic model to a decision log
    Analyze(AnalyzeArgs),
}

pub fn run(cli: &Cli, out: &mut impl std::io::Write) -> CliResult<()> {
    match &cli.command {
        Command::Solve(args) => commands::cmd_solve(args, out),
        Command::Replicate(args) => commands::cmd_replicate(args, out),
        Command::Simulate(args) => commands::cmd_simulate(args, out),
        Command::Sweep(args) => commands::cmd_sweep(args, out),
        Command::Analyze(args) => commands::cmd_analyze(args, out),
    }
}
