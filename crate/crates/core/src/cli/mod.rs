//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 input or flag error, 3 degenerate system,
//! 4 numerical failure, 5 explorer anomaly.

mod commands;
pub mod files;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub use commands::{generate, GenKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_ANOMALY: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegenerateSystem { .. } | Error::DegenerateTransform { .. } => EXIT_DEGENERATE,
            Error::NumericalFailure(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polarization", version, about = "Lower bounds and witnesses for sup |<x_1,y>...<x_n,y>| over unit y")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Gradient,
    Grid,
    MonteCarlo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gram spectrum and all eigenvalue lower bounds.
    Bounds {
        instance: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Construct a unit vector attaining the geometric-mean bound.
    Witness {
        instance: PathBuf,
        /// Re-check the witness and compare it with the oracle estimate.
        #[arg(long)]
        verify: bool,
        /// Include the per-level slicing record.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Numerical estimate of the supremum.
    Oracle {
        instance: PathBuf,
        /// Random starts (or samples for monte-carlo).
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OracleKind::Gradient)]
        method: OracleKind,
        #[arg(long, default_value_t = 10_000)]
        grid_points: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search for systems with a small normalized supremum.
    Explore {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write an instance file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// random | orthonormal | angle:<radians>
        #[arg(long, default_value = "random")]
        kind: GenKind,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare measured slice volumes with the closed-form slice formula on a
    /// random ellipsoid.
    SliceDemo {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 13)]
        rows: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl FromStr for GenKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(GenKind::Random),
            "orthonormal" => Ok(GenKind::Orthonormal),
            _ => match s.strip_prefix("angle:") {
                Some(t) => t
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(GenKind::Angle)
                    .ok_or_else(|| format!("invalid angle in {s:?}")),
                None => Err(format!("unknown kind {s:?} (random, orthonormal, angle:<radians>)")),
            },
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let code = |e: Error| CliError::from(e).code;
        assert_eq!(code(Error::DegenerateSystem { smallest_eigenvalue: 0.0 }), EXIT_DEGENERATE);
        assert_eq!(code(Error::NumericalFailure("x".into())), EXIT_NUMERICAL);
        assert_eq!(code(Error::NonUnitVector { row: 1, norm: 0.5 }), EXIT_INPUT);
        assert_eq!(code(Error::InvalidConfig("x".into())), EXIT_INPUT);
        assert_eq!(code(Error::WrongDimension { expected: 2, found: 3 }), EXIT_INPUT);
    }

    #[test]
    fn flag_errors_exit_two() {
        assert_eq!(run(["polarization", "gen", "--n", "2", "--kind", "spiral"]), EXIT_INPUT);
        assert_eq!(run(["polarization", "explore", "--n", "12", "--budget", "5"]), EXIT_INPUT);
        assert_eq!(run(["polarization", "nonsense"]), EXIT_INPUT);
        assert_eq!(run(["polarization", "--help"]), EXIT_OK);
    }
}
