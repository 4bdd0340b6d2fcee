//! Experiment driver for `pacmech`: TOML config in, CSV or JSON tables out.
//!
//! Exit status: 0 when the run passes (or a supplied plan is feasible), 1
//! when the experiment itself fails, 2 for unusable input.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suites;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Report;
pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::{Format, ResultTable};

#[derive(Debug, Parser)]
#[command(name = "pacmech", version, about = "PAC learning from strategic noisy annotators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config; defaults apply to every omitted key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Run the auction even when the score is not monotone.
    #[arg(long, global = true)]
    pub allow_irregular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// ψ, single-annotator sample sizes and feasibility of a plan.
    Feasibility,
    /// Cheapest feasible plan, rounded LP and exact.
    Plan,
    /// Empirical failure rate of the minimum-disagreement learner.
    SimulateMda,
    /// One run of the procurement auction.
    Auction,
    /// Incentive, audit and plan-bound property suites.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Feasibility => "feasibility",
            Command::Plan => "plan",
            Command::SimulateMda => "simulate-mda",
            Command::Auction => "auction",
            Command::Verify => "verify",
        }
    }
}

/// Reads the config and applies the command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.allow_irregular {
        cfg.auction.allow_irregular = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match command {
        Command::Feasibility => commands::feasibility(cfg),
        Command::Plan => commands::plan(cfg),
        Command::SimulateMda => commands::simulate_mda(cfg),
        Command::Auction => commands::auction(cfg),
        Command::Verify => commands::verify(cfg),
    }
}

/// Runs the command and returns the rendered table and whether it passed.
pub fn run(cli: &Cli) -> Result<(String, bool), CliError> {
    let cfg = resolve_config(cli)?;
    let report = execute(cli.command, &cfg)?;
    Ok((report.table.render(cli.format), report.passed))
}
