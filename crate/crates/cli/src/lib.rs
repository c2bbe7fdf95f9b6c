//! Command line workflows around `nehari-core`: config ingestion, the six subcommands and
//! their output files.
//!
//! Every output is a pure function of the config file (including `rng_seed`) and the
//! command line, so repeated runs produce byte-identical files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nehari_core::{Error, FiberCoeffs};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_certify, cmd_fiber, cmd_m0, cmd_scan, cmd_solve, cmd_validate};
pub use config::{CertifyConfig, RunConfig, ScanConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    /// 1 internal failure, 2 invalid config or regime, 3 no convergence,
    /// 4 no start on `M+` / no negative fiber.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidParameter(_)
                | Error::RegimeMismatch(_)
                | Error::UnsupportedRegime(_)
                | Error::InvalidCoefficients(_) => 2,
                Error::ConvergenceFailure(_) | Error::BranchLossFailure { .. } => 3,
                Error::InitializationFailure(_) | Error::NoNegativeFiber { .. } => 4,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Invariant(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nehari",
    version,
    about = "Nehari-manifold ground states for a doubly weighted Schrödinger equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the resolved parameters and their regime.
    Validate(Common),
    /// Sample the fiber map and locate its roots.
    Fiber {
        #[command(flatten)]
        common: Common,
        /// Coefficients `D,M,B,C` instead of a Gaussian seed.
        #[arg(long, value_parser = parse_coeffs)]
        coeffs: Option<FiberCoeffs>,
    },
    /// Construct a point of M0 on the orbit of the coefficients.
    M0 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coeffs)]
        coeffs: Option<FiberCoeffs>,
    },
    /// Minimize the energy on M+.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Run outside the existence hypotheses, starting from an amplitude scan.
        #[arg(long)]
        override_regime: bool,
    },
    /// Check the nonexistence certificate and run the critical-regime diagnostic.
    Certify(Common),
    /// Sweep a (p, q) grid.
    Scan(Common),
}

/// Parses `D,M,B,C`.
pub fn parse_coeffs(text: &str) -> Result<FiberCoeffs, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected four comma-separated values D,M,B,C, got {text:?}"
        ));
    }
    let mut v = [0.0; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|e| format!("bad coefficient {part:?}: {e}"))?;
    }
    FiberCoeffs::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(c) => cmd_validate(&c.config),
        Command::Fiber { common, coeffs } => cmd_fiber(&common.config, &common.out, *coeffs),
        Command::M0 { common, coeffs } => cmd_m0(&common.config, &common.out, *coeffs),
        Command::Solve {
            common,
            override_regime,
        } => cmd_solve(&common.config, &common.out, *override_regime),
        Command::Certify(c) => cmd_certify(&c.config, &c.out),
        Command::Scan(c) => cmd_scan(&c.config, &c.out),
    }
}
