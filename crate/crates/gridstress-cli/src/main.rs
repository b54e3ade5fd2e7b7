//! `gridstress`: batch analytics over hourly balancing-authority data.
//!
//! Four subcommands share one declarative config: `ingest` normalizes raw
//! files and reports coverage, `indicators` writes the stress-indicator
//! tables, `density` compares an indicator's distribution between two
//! windows, and `backcast` fits the weather model and writes the daily
//! weather-corrected change table.
//!
//! Exit codes: 0 success, 2 input or config error, 3 insufficient data,
//! 4 numerical failure. Identical inputs and config always produce
//! byte-identical outputs.

mod commands;
mod config;
mod data;
mod error;
mod render;

use clap::{Args, Parser, Subcommand};
use config::{AnalysisConfig, OutputFormat, RegionConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gridstress",
    version,
    about = "Grid stress indicators and weather-corrected demand analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw files, write normalized series and a coverage report
    Ingest(CommonArgs),
    /// Write daily peak/trough, ramp, forecast-error, interchange and
    /// totals tables
    Indicators(CommonArgs),
    /// Compare an indicator's density between two named windows
    Density(CommonArgs),
    /// Fit the weather model, predict the counterfactual, write the
    /// change table
    Backcast(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Analysis config (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Run a single region instead of all configured ones
    #[arg(long, value_name = "ID")]
    region: Option<String>,
    /// Named config window(s); meaning depends on the subcommand
    #[arg(long = "window", value_name = "NAME")]
    windows: Vec<String>,
    /// Output format, overriding the config
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Output directory, overriding the config
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() {
    std::process::exit(run(Cli::parse()));
}

fn run(cli: Cli) -> i32 {
    let (args, command): (&CommonArgs, fn(&AnalysisConfig, &RegionConfig, &CommonArgs) -> _) =
        match &cli.command {
            Command::Ingest(args) => (args, run_ingest),
            Command::Indicators(args) => (args, run_indicators),
            Command::Density(args) => (args, run_density),
            Command::Backcast(args) => (args, run_backcast),
        };

    let mut config = match AnalysisConfig::load(&args.config) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(format) = args.format {
        config.format = format;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }

    let regions: Vec<&RegionConfig> = match &args.region {
        None => config.regions.iter().collect(),
        Some(id) => {
            let matched: Vec<&RegionConfig> =
                config.regions.iter().filter(|r| &r.id == id).collect();
            if matched.is_empty() {
                let known: Vec<&str> = config.regions.iter().map(|r| r.id.as_str()).collect();
                eprintln!(
                    "error: config defines no region {id:?} (known: {})",
                    known.join(", ")
                );
                return error::EXIT_INPUT;
            }
            matched
        }
    };

    if matches!(cli.command, Command::Ingest(_)) && !args.windows.is_empty() {
        eprintln!("warning: ingest always covers the full series; ignoring --window");
    }

    // Regions run independently: one failure is reported but does not stop
    // the rest. The exit code reflects the first failure.
    let mut first_failure: Option<i32> = None;
    let mut failures = 0usize;
    for region in &regions {
        if let Err(e) = command(&config, region, args) {
            eprintln!("error: [{}] {e}", region.id);
            failures += 1;
            first_failure.get_or_insert(e.exit_code());
        }
    }
    if failures > 0 {
        eprintln!("{failures} of {} region(s) failed", regions.len());
    }
    first_failure.unwrap_or(0)
}

fn run_ingest(
    config: &AnalysisConfig,
    region: &RegionConfig,
    args: &CommonArgs,
) -> Result<(), error::CliError> {
    let _ = args;
    commands::ingest::run(region, config.format, &config.out_dir)
}

fn run_indicators(
    config: &AnalysisConfig,
    region: &RegionConfig,
    args: &CommonArgs,
) -> Result<(), error::CliError> {
    commands::indicators::run(config, region, &args.windows, config.format, &config.out_dir)
}

fn run_density(
    config: &AnalysisConfig,
    region: &RegionConfig,
    args: &CommonArgs,
) -> Result<(), error::CliError> {
    commands::density::run(config, region, &args.windows, config.format, &config.out_dir)
}

fn run_backcast(
    config: &AnalysisConfig,
    region: &RegionConfig,
    args: &CommonArgs,
) -> Result<(), error::CliError> {
    commands::backcast::run(config, region, &args.windows, config.format, &config.out_dir)
}
