//! Batch front end: `fit`, `price`, `simulate`, `density` and `stats`.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 estimation
//! failure, 4 solver failure.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{CosSettings, DensityMeasure, DensitySettings, RunConfig, StatsSettings};
pub use output::{fmt_num, round_sig, to_json};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FIT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "weathercat", version, about = "Temperature CAT derivatives: calibration, simulation and COS pricing")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed (overrides `sim.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add a Monte Carlo price to the report.
    #[arg(long, global = true)]
    pub mc: bool,
    /// Number of simulated paths (overrides `sim.n_paths`).
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Number of cosine terms (overrides `cos.terms`).
    #[arg(long, global = true)]
    pub terms: Option<usize>,
    /// Truncation width in standard deviations (overrides `cos.l_mult`).
    #[arg(long = "l-mult", global = true)]
    pub l_mult: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate the model to a daily temperature CSV.
    Fit {
        /// CSV with `date,tmax,tmin` or `date,tavg` columns.
        csv: Option<PathBuf>,
    },
    /// Price the configured CAT strangle.
    Price,
    /// Simulate daily temperature paths to CSV.
    Simulate,
    /// Tabulate the CAT density under P or the Esscher measure.
    Density,
    /// Summary statistics, normality test, histogram and kernel density.
    Stats {
        csv: Option<PathBuf>,
    },
}

/// Failure of a command with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl CliError {
    pub fn input(error: Error) -> Self {
        Self { code: EXIT_INPUT, error }
    }

    pub fn fit(error: Error) -> Self {
        Self { code: EXIT_FIT, error }
    }

    /// Configuration problems map to 2, everything else to 4.
    pub fn solver(error: Error) -> Self {
        let code = match error {
            Error::InvalidParameter(_) | Error::Domain(_) | Error::Json(_) | Error::Io(_) => EXIT_INPUT,
            _ => EXIT_SOLVER,
        };
        Self { code, error }
    }
}

impl RunConfig {
    fn apply(&mut self, g: &GlobalArgs) {
        if let Some(seed) = g.seed {
            self.sim.seed = seed;
        }
        if let Some(paths) = g.paths {
            self.sim.n_paths = paths;
        }
        if let Some(terms) = g.terms {
            self.cos.terms = terms;
        }
        if let Some(l) = g.l_mult {
            self.cos.l_mult = l;
        }
        if g.mc {
            self.mc = true;
        }
        if let Some(out) = &g.out {
            self.output = Some(out.clone());
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.error);
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> std::result::Result<(), CliError> {
    let mut config = match &cli.global.config {
        Some(path) => RunConfig::load(path).map_err(CliError::input)?,
        None => RunConfig::default(),
    };
    config.apply(&cli.global);
    match &cli.command {
        Command::Fit { csv } => commands::fit(&config, csv.as_deref()),
        Command::Price => commands::price(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Density => commands::density(&config),
        Command::Stats { csv } => commands::stats(&config, csv.as_deref()),
    }
}
