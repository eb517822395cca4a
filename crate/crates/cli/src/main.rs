//! `cluster-forge`: exact tables, bounds, simulations and 2D weaving scans
//! as plot-ready CSV or JSON.

mod commands;
mod output;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use cluster_forge_core::{Error, Probability};

use crate::output::Sink;

#[derive(Parser, Debug)]
#[command(
    name = "cluster-forge",
    version,
    about = "Fusion strategies for linear and 2D cluster states"
)]
struct Cli {
    /// Worker threads; defaults to all available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write results to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected final length of strategies over a range of N.
    Quality(QualityArgs),
    /// Build the optimal table and write it in the persisted text format.
    OptimalTable(OptimalTableArgs),
    /// Lower bound, Modesty, optimum and upper bounds at success probability 1/2.
    Bounds(BoundsArgs),
    /// Razor-model quality, attempts and upper bound over N and R.
    Razor(RazorArgs),
    /// Monte Carlo estimate of a strategy's final length, as JSON.
    Mc(McArgs),
    /// Exact and simulated 2D weaving success.
    Weave(WeaveArgs),
    /// P_s(n) over a grid of success probabilities at fixed overhead a.
    PercolationScan(ScanArgs),
    /// Run the invariant suite at the given sizes.
    Validate(ValidateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyName {
    Greed,
    Modesty,
    Static,
    Optimal,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStrategy {
    Greed,
    Modesty,
    Static,
    Optimal,
    TwoStage,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inner {
    Greed,
    Modesty,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct QualityArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub strategy: StrategyName,
    #[arg(long, default_value_t = 1)]
    pub n_min: u32,
    #[arg(long)]
    pub n_max: u32,
    /// Success probability: `a/b` for exact arithmetic, a decimal for floating point.
    #[arg(long, default_value = "1/2")]
    pub ps: Probability,
    /// Maximum number of optimal-table entries.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OptimalTableArgs {
    #[arg(long)]
    pub n: u32,
    /// Rational success probability `a/b`.
    #[arg(long, default_value = "1/2")]
    pub ps: Probability,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("range").required(true).multiple(false)))]
pub struct BoundsArgs {
    /// A single N.
    #[arg(long, group = "range")]
    pub n: Option<u32>,
    /// All N from 1 to this value.
    #[arg(long, group = "range")]
    pub n_max: Option<u32>,
    /// Base size of the Modesty lower bound.
    #[arg(long, default_value_t = 8)]
    pub n0: u32,
    /// Razor length for the upper-bound column.
    #[arg(long, default_value_t = 2)]
    pub r: u32,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("range").required(true).multiple(false)))]
pub struct RazorArgs {
    /// A single N.
    #[arg(long, group = "range")]
    pub n: Option<u32>,
    /// All N from 2 to this value.
    #[arg(long, group = "range")]
    pub n_max: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub r_min: u32,
    #[arg(long, default_value_t = 6)]
    pub r_max: u32,
    #[arg(long, default_value = "1/2")]
    pub ps: Probability,
    /// Add the optimal quality as a reference column.
    #[arg(long)]
    pub with_optimal: bool,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub strategy: McStrategy,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value = "1/2")]
    pub ps: Probability,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Block size for `two-stage`.
    #[arg(long, default_value_t = 8)]
    pub block: u32,
    /// Strategy used inside the blocks for `two-stage`.
    #[arg(long, value_enum, default_value = "modesty")]
    pub inner: Inner,
    /// Also count trials whose final length reaches this value.
    #[arg(long)]
    pub threshold: Option<u64>,
}

#[derive(Args, Debug)]
pub struct WeaveArgs {
    /// Cluster sides, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub ps: Probability,
    /// Simulated trials per row; 0 skips the simulation columns.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub a: f64,
    /// Success probabilities, comma separated; defaults to 0.05, 0.10, ..., 0.95.
    #[arg(long, value_delimiter = ',')]
    pub ps: Vec<f64>,
    /// Cluster sides, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub n: Vec<u32>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Largest number of EPR pairs for strategy and table checks.
    #[arg(long, default_value_t = 12)]
    pub n_max: u32,
    /// Largest total length for the monotonicity checks.
    #[arg(long, default_value_t = 10)]
    pub lemma_size: u32,
    /// Largest N for the linear-program certificates.
    #[arg(long, default_value_t = 200)]
    pub lp_max: u32,
    #[arg(long, default_value = "1/2")]
    pub ps: Probability,
}

/// A command failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn certificate(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 2,
            Error::Certificate { .. } | Error::Hypothesis { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let sink = Sink::new(cli.output)?;
    match cli.command {
        Command::Quality(a) => commands::quality(&a, sink),
        Command::OptimalTable(a) => commands::optimal_table(&a, sink),
        Command::Bounds(a) => commands::bounds(&a, sink),
        Command::Razor(a) => commands::razor(&a, sink),
        Command::Mc(a) => commands::mc(&a, sink),
        Command::Weave(a) => commands::weave(&a, sink),
        Command::PercolationScan(a) => commands::percolation_scan(&a, sink),
        Command::Validate(a) => commands::validate(&a, sink),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
