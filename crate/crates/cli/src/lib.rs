//! The `mottlab` command line: argument parsing, configuration files and
//! artifact writing. [`run`] is the whole program; the binary only forwards
//! its arguments and exit code.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mottlab",
    version,
    about = "Cloud-chamber track-start and Geiger window flux modelling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated artifact formats: any of csv, json, svg.
    #[arg(long, default_value = "csv,json,svg")]
    formats: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample track starts and compare their CDF with the quadrature model.
    ChamberSimulate {
        #[command(flatten)]
        common: Common,
        /// Seed for every random stream of the run.
        #[arg(long)]
        seed: u64,
        /// Number of track starts (overrides the config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the model CDF to measured track starts.
    ChamberFit {
        #[command(flatten)]
        common: Common,
        /// Track-start CSV with header `frame,x,y` in pixels.
        #[arg(long)]
        data: PathBuf,
        /// Image calibration in mm per pixel.
        #[arg(long)]
        calibration: f64,
        /// Source position in the image, `x,y` pixels.
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        source_px: String,
        /// Also fit a large-distance cutoff of the density.
        #[arg(long)]
        cutoff: bool,
    },
    /// Tabulate normalized Geiger window flux curves.
    GeigerCurves {
        #[command(flatten)]
        common: Common,
        /// Measured `g_mm,count_rate` CSV to overlay and fit.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fit the air-equivalent window thickness S·Z to the data.
        #[arg(long)]
        fit_sz: bool,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ChamberSimulate { common, seed, n } => {
            commands::chamber_simulate(&commands::Options::parse(&common)?, seed, n)
        }
        Command::ChamberFit {
            common,
            data,
            calibration,
            source_px,
            cutoff,
        } => commands::chamber_fit(
            &commands::Options::parse(&common)?,
            &data,
            calibration,
            &source_px,
            cutoff,
        ),
        Command::GeigerCurves { common, data, fit_sz } => {
            commands::geiger_curves(&commands::Options::parse(&common)?, data.as_deref(), fit_sz)
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 2 usage, 3 data error, 4 numerical failure.
/// Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return u8::try_from(e.exit_code()).unwrap_or(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mottlab: {e}");
            e.exit_code()
        }
    }
}

impl commands::Options {
    fn parse(common: &Common) -> Result<Self, CliError> {
        Ok(Self {
            config: common.config.clone(),
            out: common.out.clone(),
            formats: config::Formats::parse(&common.formats)?,
        })
    }
}
