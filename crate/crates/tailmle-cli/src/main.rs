//! Batch front end for tail inference: fit estimators to data files, print
//! asymptotic laws, run Monte Carlo studies and sweep the number of upper
//! order statistics.

mod commands;
mod input;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tailmle::EstimatorKind;

#[derive(Parser)]
#[command(
    name = "tailmle",
    version,
    about = "Generalized Pareto tail inference from the top-k order statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format (sweep is always csv)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the document here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for randomized commands; falls back to TAILMLE_SEED, then 0
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit tail estimators to a data file (one number per line)
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Number of upper order statistics to use
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Mle)]
        estimator: EstimatorArg,
        /// Confidence level for the plug-in intervals
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Print the asymptotic bias vector and covariance of the standardized
    /// estimates
    Asymptotics {
        #[arg(long)]
        gamma0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Monte Carlo study over an exact second-order sample family
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        gamma0: f64,
        /// Second-order parameter; required when --c is nonzero
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        /// Second-order amplitude (0 gives an exact generalized Pareto tail)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        c: f64,
        /// Sample size per replication
        #[arg(long)]
        n: usize,
        /// Number of upper order statistics (alternative to --lambda)
        #[arg(long)]
        k: Option<usize>,
        /// Target bias level; k is derived from it (alternative to --k)
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of replications (>= 2)
        #[arg(long)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Mle)]
        estimator: EstimatorArg,
    },
    /// Fit one estimator across a range of k; emits plot-ready CSV
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long, default_value_t = 1)]
        k_step: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Mle)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mle,
    ExplicitZero,
    Moment,
    All,
}

impl EstimatorArg {
    pub fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            EstimatorArg::Mle => vec![EstimatorKind::Mle],
            EstimatorArg::ExplicitZero => vec![EstimatorKind::ExplicitZero],
            EstimatorArg::Moment => vec![EstimatorKind::Moment],
            EstimatorArg::All => vec![
                EstimatorKind::Mle,
                EstimatorKind::ExplicitZero,
                EstimatorKind::Moment,
            ],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
