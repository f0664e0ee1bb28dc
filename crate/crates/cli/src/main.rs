//! `bures-geo`: fidelities, geodesics, their physical realization and
//! metrology experiments from the command line.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure,
//! 4 precondition violation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bures_geo::ErrorClass;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bures_geo::Error),
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, std::io::Error),
    #[error("{}: {}", .0.display(), .1)]
    Json(PathBuf, serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0} acceptance criteria failed")]
    Selfcheck(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Precondition => 4,
            },
            CliError::Io(..) | CliError::Json(..) | CliError::Usage(_) => 2,
            CliError::Selfcheck(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "bures-geo", version, about = "Bures geodesics between mixed quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Variant {
    /// One dense system-ancilla block following the requested geodesic.
    General,
    /// Real amplitudes on the system, C-NOTs from system to ancilla.
    Commuting,
    /// Ancilla preparation, C-NOTs from ancilla to system.
    Entangling,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity, Bures angle and Bures distance of two states.
    Fidelity {
        rho: PathBuf,
        sigma: PathBuf,
        /// Also write the values to this JSON file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Geodesics joining two invertible states.
    Geodesic {
        rho: PathBuf,
        sigma: PathBuf,
        /// Sign vector such as "+-", largest eigenvalue of Lambda first.
        #[arg(long, conflicts_with = "enumerate", allow_hyphen_values = true)]
        signs: Option<String>,
        /// All 2^n geodesics, sorted by length.
        #[arg(long)]
        enumerate: bool,
        /// Number of evenly spaced states to sample on [0, theta].
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// Report the boundary intersections and their kernels.
        #[arg(long)]
        intersections: bool,
        /// Write the JSON bundle here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve along a geodesic with its Hamiltonian, or emit a circuit.
    Evolve {
        rho: PathBuf,
        /// Target state; required except for the commuting and entangling circuits.
        sigma: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        signs: Option<String>,
        /// Geodesic parameter; defaults to the length when emitting a circuit.
        #[arg(long, required_unless_present = "circuit")]
        tau: Option<f64>,
        /// Write a circuit JSON file here.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "general", requires = "circuit")]
        variant: Variant,
        /// Real amplitudes for the commuting variant, comma separated,
        /// ordered like the eigenvalues of rho from largest to smallest.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
        /// Write the resulting state here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a maximum-likelihood experiment and/or a Heisenberg scan.
    Metrology {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "metrology-out")]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Selfcheck {
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BURES_GEO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BURES_GEO_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Fidelity { rho, sigma, json } => commands::fidelity(&rho, &sigma, json.as_deref()),
        Command::Geodesic { rho, sigma, signs, enumerate, samples, intersections, out } => {
            commands::geodesic(&commands::GeodesicArgs {
                rho,
                sigma,
                signs,
                enumerate,
                samples,
                intersections,
                out,
            })
        }
        Command::Evolve { rho, sigma, signs, tau, circuit, variant, alpha, out } => {
            commands::evolve(&commands::EvolveArgs { rho, sigma, signs, tau, circuit, variant, alpha, out })
        }
        Command::Metrology { config, out } => commands::metrology(&config, &out),
        Command::Selfcheck { criterion } => commands::selfcheck(criterion),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
