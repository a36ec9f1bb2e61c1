//! `carcrowd` command-line driver.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use carcrowd::estimator::Distortion;

#[derive(Debug, Parser)]
#[command(
    name = "carcrowd",
    version,
    about = "Carbody vibration and per-car crowding toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file; the built-in five-station scenario if omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `mcmc.seed` from the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beam roots and modal frequencies of the flexible carbody.
    Modes {
        #[command(flatten)]
        common: Common,
        /// Passenger counts to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        counts: Vec<u32>,
    },
    /// 2-DOF transfer function magnitude on a 0-10 Hz grid.
    Tf2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,50,100,150")]
        counts: Vec<u32>,
    },
    /// Multi-DOF carbody acceleration PSD.
    Psd {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,50,100,150")]
        counts: Vec<u32>,
        /// Position along the carbody in metres; midpoint if omitted.
        #[arg(long, value_name = "X_METERS")]
        location: Option<f64>,
    },
    /// Track irregularity PSD seen by the vehicle.
    Track {
        #[command(flatten)]
        common: Common,
    },
    /// One simulated traversal of the line.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Counter noise standard deviation; `apc.noise_sigma` if omitted.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Posterior crowding predictions for a simulated traversal.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum)]
        distortion: Option<DistortionArg>,
        /// Simulation CSV from `simulate`; re-simulated from the seed if omitted.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Monte Carlo experiment.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Comma-separated noise levels; `montecarlo.sigmas` if omitted.
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_enum)]
        distortion: Option<DistortionArg>,
    },
    /// Passenger count from an observed acceleration PSD.
    EstimateLoad {
        #[command(flatten)]
        common: Common,
        /// CSV with header `frequency_hz,value`.
        #[arg(long, value_name = "PATH")]
        observed: PathBuf,
        /// Candidate counts; 0, 5, ..., 150 if omitted.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<u32>>,
        #[arg(long, value_name = "X_METERS")]
        location: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum DistortionArg {
    None,
    Moderate,
    Severe,
}

impl From<DistortionArg> for Distortion {
    fn from(d: DistortionArg) -> Self {
        match d {
            DistortionArg::None => Distortion::None,
            DistortionArg::Moderate => Distortion::Moderate,
            DistortionArg::Severe => Distortion::Severe,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    use commands as c;
    match cli.command {
        Command::Modes { common, counts } => c::modes(&common, &counts),
        Command::Tf2 { common, counts } => c::tf2(&common, &counts),
        Command::Psd {
            common,
            counts,
            location,
        } => c::psd(&common, &counts, location),
        Command::Track { common } => c::track(&common),
        Command::Simulate { common, sigma } => c::simulate(&common, sigma),
        Command::Estimate {
            common,
            sigma,
            distortion,
            input,
        } => c::estimate(&common, sigma, distortion.map(Into::into), input.as_deref()),
        Command::Mc {
            common,
            sigma,
            runs,
            distortion,
        } => c::mc(&common, sigma, runs, distortion.map(Into::into)),
        Command::EstimateLoad {
            common,
            observed,
            counts,
            location,
        } => c::estimate_load(&common, &observed, counts, location),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
