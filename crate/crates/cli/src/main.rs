mod commands;
mod config;
mod report;
mod svg;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::ScenarioConfig;
use report::OutDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("violation: {0}")]
    Violation(String),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn violation(e: impl Display) -> Self {
        CliError::Violation(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
        }
    }
}

/// Simulate Volterra operators on the infinite-dimensional simplex.
#[derive(Parser)]
#[command(name = "volterra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the operator once and report the image.
    Apply(RunArgs),
    /// Iterate the operator and diagnose convergence.
    Iterate(RunArgs),
    /// Find a point of the fixed-point region or certify emptiness.
    Qset(QsetArgs),
    /// Compare powers of finite truncations against their error bounds.
    TruncationStudy(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario config.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct QsetArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Certify emptiness of the alternating system for n in FROM..=TO.
    #[arg(long, value_name = "FROM..TO", value_parser = parse_range)]
    emptiness: Option<(usize, usize)>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected FROM..TO, got `{s}`"))?;
    let from = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let to = b
        .trim_start_matches('=')
        .parse()
        .map_err(|e| format!("{b}: {e}"))?;
    Ok((from, to))
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => ScenarioConfig::scenario(name)?,
        (None, None) => {
            return Err(CliError::Config(
                "either --config or --scenario is required".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    match cli.command {
        Command::Apply(args) => commands::apply(&load(&args)?, &OutDir::create(&args.out)?),
        Command::Iterate(args) => commands::iterate(&load(&args)?, &OutDir::create(&args.out)?),
        Command::Qset(args) => {
            let mut cfg = load(&args.run)?;
            if let Some((from, to)) = args.emptiness {
                cfg.emptiness = Some(config::EmptinessRange { from, to });
            }
            commands::qset(&cfg, &OutDir::create(&args.run.out)?)
        }
        Command::TruncationStudy(args) => {
            commands::truncation_study(&load(&args)?, &OutDir::create(&args.out)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) if outcome.violations.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for v in &outcome.violations {
                eprintln!("violation: {v}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
