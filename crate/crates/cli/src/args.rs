use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated tables with a header row.
    Csv,
    /// Structured JSON documents.
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "bizsched", version, about = "Hybrid technical/business priority scheduling simulator")]
pub struct Cli {
    /// TOML config file; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "BIZSCHED_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Print the effective config, defaults included, and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a workload and write it as a job file.
    Generate,
    /// Run paired native and resultant simulations.
    Simulate {
        /// Job file (.csv or .json) to use instead of generating one.
        #[arg(long, value_name = "PATH")]
        jobs: Option<PathBuf>,
    },
    /// Evaluate the M/G/1 model, optionally against a simulation report.
    Analyze {
        /// Report JSON written by `simulate`.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Emit reference and simulated replication series.
    Replicate,
}
