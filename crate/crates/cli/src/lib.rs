//! Command-line harness around the `bhsc` engines.

pub mod commands;
pub mod config;
pub mod inventory;
pub mod output;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{stage}: {source}")]
    Engine {
        stage: &'static str,
        #[source]
        source: bhsc::Error,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn engine(stage: &'static str) -> impl FnOnce(bhsc::Error) -> CliError {
        move |source| CliError::Engine { stage, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Engine { .. } | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bhsc", version, about = "Autocorrelations and spectra of Bose-Hubbard ring density waves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides both the TWA and the saddle-seeding seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact autocorrelation by sector-wise Krylov propagation.
    Quantum {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        eps_trunc: Option<f64>,
    },
    /// Truncated Wigner estimate of C(tau).
    Twa {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Saddle-trajectory inventory over the grid.
    Saddles {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        seeding_samples: Option<usize>,
        #[arg(long)]
        newton_tol: Option<f64>,
        #[arg(long)]
        keep_discarded: bool,
    },
    /// Coherent saddle sum, from a saved inventory or from a fresh sweep.
    Semiclassical {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
    /// Windowed Fourier spectrum of a time-series CSV.
    Spectrum {
        /// CSV with columns tau, re_A, im_A.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        e_min: Option<f64>,
        #[arg(long)]
        e_max: Option<f64>,
        #[arg(long)]
        e_step: Option<f64>,
        #[arg(long)]
        e0: Option<f64>,
    },
    /// Runs the configured engines on one grid and reports deviations.
    Compare {
        #[command(flatten)]
        grid: GridArgs,
    },
}

pub use commands::run;
