//! `lpbf`: feedforward laser power scheduling from the command line.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration or input
//! error, 3 numeric failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lpbf_feedforward::Error;

#[derive(Debug, Parser)]
#[command(name = "lpbf", version, about = "Vector-level feedforward laser power scheduling")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Material preset (IN718, 316LSS) or a TOML property file.
    #[arg(long, global = true)]
    pub material: Option<String>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for synthetic data; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; the machine's core count when unset.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the melt-pool constants to single-track measurements.
    FitMeltpool {
        /// CSV with P_W, v_mm_s, Tb_C, width_um, length_um, source.
        tracks: PathBuf,
        /// Use only tracks from this source.
        #[arg(long)]
        source: Option<String>,
    },
    /// Compute the feedforward power schedule for a scan path.
    Schedule { scanpath: PathBuf },
    /// Sweep the heat-input tuning factor on a stepped pyramid.
    TuneF {
        /// Scan path to calibrate on; the built-in pyramid when omitted.
        #[arg(long)]
        scanpath: Option<PathBuf>,
        /// Comma-separated candidates; overrides the config.
        #[arg(long, value_delimiter = ',')]
        f_values: Option<Vec<f64>>,
    },
    /// Open-loop run at fixed powers, with temperature snapshots.
    Simulate {
        scanpath: PathBuf,
        /// CSV with vector_id and power_W columns; nominal powers when omitted.
        #[arg(long)]
        powers: Option<PathBuf>,
    },
    /// Write a built-in scan path and a matching config.
    GenFixture {
        kind: FixtureKind,
        #[arg(long, value_enum, default_value_t = FixtureSize::Default)]
        size: FixtureSize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    SteppedPyramid,
    OverhangSlab,
    SingleTracks,
    /// Synthetic single-track measurements over the calibration sweep.
    Tracks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureSize {
    Default,
    Reduced,
    Small,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) if e.is_numeric() => write!(f, "numeric failure: {e}"),
            CliError::Core(e) => write!(f, "error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(Error::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lpbf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
