//! `friedrichs`: command-line driver for the Friedrichs model laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// `println!` that stops quietly once standard output is closed.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use friedrichs::Error;

#[derive(Parser, Debug)]
#[command(name = "friedrichs", version, about = "Friedrichs model resolvent, threshold and time-evolution analyses")]
pub struct Cli {
    /// Worker threads for grid sweeps (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// CSV output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Target accuracy.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Panel budget of the spectral quadrature.
    #[arg(long, default_value_t = 200_000)]
    pub max_panels: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TimeGrid {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tmin: f64,
    #[arg(long, default_value_t = 50.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 101)]
    pub tpoints: usize,
    /// Time range as `a..b`, overriding `--tmin/--tmax`.
    #[arg(long = "t", value_name = "A..B")]
    pub range: Option<String>,
    /// Geometric instead of uniform spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FreqGrid {
    #[arg(long, default_value_t = 0.01)]
    pub wmin: f64,
    #[arg(long, default_value_t = 10.0)]
    pub wmax: f64,
    #[arg(long, default_value_t = 200)]
    pub wpoints: usize,
    /// Geometric instead of uniform spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a scenario against the schema and the admissibility rules.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Zero-energy classification and the projections onto M0, M1, M2.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Couplings at which an eigenvalue of K(0) vanishes.
    CriticalCoupling {
        #[command(flatten)]
        common: Common,
        /// Zero-based level index; all levels when omitted.
        #[arg(long)]
        level: Option<usize>,
    },
    /// D(w) and Gamma(w) on a frequency grid.
    SelfEnergy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: FreqGrid,
    },
    /// Im R(w + i0) on a frequency grid, with the embedded-eigenvalue scan.
    SpectralDensity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: FreqGrid,
    },
    /// Second-sheet poles in a rectangle of the lower half-plane.
    Resonances {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        re_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        re_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        im_min: Option<f64>,
        #[arg(long, default_value_t = -1e-3, allow_negative_numbers = true)]
        im_max: f64,
        /// Seed grid as `NRxNI`.
        #[arg(long, default_value = "8x8")]
        seeds: String,
    },
    /// Reduced evolution U(t) and survival probabilities.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        time: TimeGrid,
        /// Initial level vector as comma-separated real components.
        #[arg(long)]
        psi: Option<String>,
    },
    /// Long-time asymptote appropriate to the threshold kind.
    Asymptote {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        time: TimeGrid,
    },
    /// U(t) next to its asymptote, with ratio columns.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        time: TimeGrid,
    },
    /// <psi|U(t)|psi> against the discretized Hamiltonian on several grids.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        time: TimeGrid,
        /// Comma-separated grid sizes.
        #[arg(long, default_value = "1000,2000,4000")]
        grids: String,
        #[arg(long)]
        psi: Option<String>,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Validation(_) => 2,
            Error::ClassificationMismatch { .. } => 3,
            Error::BudgetExceeded { .. } => 4,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        // A closed pipe downstream is not an error of ours.
        let code = if e.kind() == std::io::ErrorKind::BrokenPipe { 0 } else { 1 };
        Self { code, message: format!("i/o: {e}") }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
