//! Batch front end: JSON scenario files in, CSV/JSON artifacts plus a
//! manifest out.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, Command};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "beliefdyn", version, about = "Belief dynamics on group-structured networks")]
pub struct Cli {
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Check a config and its scenario without running anything.
    Validate(RunArgs),
    /// Run the command named in the config's `command` field.
    Run(RunArgs),
    /// Simulate the population and write trajectory.csv.
    Simulate(RunArgs),
    /// Iterate the mean-field map and write meanfield.csv.
    Meanfield(RunArgs),
    /// Entropy of a sampling distribution, written to entropy.json.
    Entropy(RunArgs),
    /// Leader's optimal target set, written to optimizer.json.
    LeaderOpt(RunArgs),
    /// Piecewise-linear consensus map per group, written to map.json.
    MapAnalyze(RunArgs),
    /// Run another command over a grid of x, n and replicates.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Replaces the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted-path override such as `population.n=500`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// What a successful invocation reports on stdout.
pub fn run(cli: &Cli, command_line: &[String]) -> CliResult<String> {
    let (command, args) = match &cli.action {
        Action::Validate(args) => return validate(args),
        Action::Run(args) => (None, args),
        Action::Simulate(args) => (Some(Command::Simulate), args),
        Action::Meanfield(args) => (Some(Command::Meanfield), args),
        Action::Entropy(args) => (Some(Command::Entropy), args),
        Action::LeaderOpt(args) => (Some(Command::LeaderOpt), args),
        Action::MapAnalyze(args) => (Some(Command::MapAnalyze), args),
        Action::Sweep(args) => (Some(Command::Sweep), args),
    };
    let config = load_config(&args.config, &args.set, args.seed)?;
    let command = command
        .or(config.command)
        .ok_or_else(|| CliError::Parse("missing field `command`".into()))?;
    let summary = commands::execute(command, &config, &args.out, command_line)?;
    Ok(serde_json::to_string_pretty(&summary).expect("summary serializes"))
}

fn validate(args: &RunArgs) -> CliResult<String> {
    let config = load_config(&args.config, &args.set, args.seed)?;
    config.params()?;
    if config.population.is_some() {
        let scenario = config.build_scenario()?;
        return Ok(format!(
            "ok: {} agents in {} groups",
            scenario.population.len(),
            scenario.population.groups.len()
        ));
    }
    Ok("ok".into())
}
