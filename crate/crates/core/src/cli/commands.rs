use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;

use super::files::{
    emit, to_json, InstanceEcho, InstanceFile, ReportFile, SliceRow, SliceTable, Timing, Verification,
};
use super::{CliError, Command, OracleKind, EXIT_ANOMALY, EXIT_DEGENERATE, EXIT_NUMERICAL, EXIT_OK};
use crate::explorer::{explore_with, ExplorerConfig};
use crate::geometry::{slice_volume_formula, Ellipsoid};
use crate::oracle::{grid_oracle_2d, monte_carlo_oracle, sup_product, OracleConfig};
use crate::sampling;
use crate::spectrum::{bounds_report, gram_spectrum, VectorSystem};
use crate::witness::{find_witness, verify_witness};

/// Log-space slack allowed in the witness/oracle sandwich check.
pub const SANDWICH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenKind {
    Random,
    Orthonormal,
    /// Two vectors at this angle (radians); `n = 2` only.
    Angle(f64),
}

/// Builds the instance `gen` writes.
pub fn generate(n: usize, seed: u64, kind: GenKind) -> Result<InstanceFile, CliError> {
    if n < 1 {
        return Err(CliError::input("n must be at least 1"));
    }
    let (system, label, seed) = match kind {
        GenKind::Random => (
            VectorSystem::random(&mut sampling::rng(seed), n),
            format!("random n={n} seed={seed}"),
            Some(seed),
        ),
        GenKind::Orthonormal => (VectorSystem::orthonormal(n), format!("orthonormal n={n}"), None),
        GenKind::Angle(theta) => {
            if n != 2 {
                return Err(CliError::input(format!("kind angle:<radians> requires n = 2, got n = {n}")));
            }
            (VectorSystem::from_angle(theta), format!("angle theta={theta}"), None)
        }
    };
    Ok(InstanceFile::from_system(&system, Some(label), seed))
}

fn load(path: &Path) -> Result<(InstanceFile, VectorSystem), CliError> {
    let file = InstanceFile::load(path)?;
    let system = file.system()?;
    Ok((file, system))
}

fn finish(mut report: ReportFile, started: Instant, output: Option<&Path>) -> Result<(), CliError> {
    report.timing = Timing {
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    emit(&to_json(&report)?, output)
}

pub(super) fn execute(command: Command) -> Result<i32, CliError> {
    let started = Instant::now();
    match command {
        Command::Bounds { instance, output } => {
            let (file, x) = load(&instance)?;
            let spectrum = gram_spectrum(&x);
            let mut report = ReportFile::new("bounds");
            report.instance = Some(InstanceEcho::from(&file));
            report.gram = Some(spectrum.gram.row_iter().map(|r| r.iter().copied().collect()).collect());
            report.bounds = Some(bounds_report(&x));
            finish(report, started, output.as_deref())?;
            if spectrum.rank_deficient {
                eprintln!(
                    "degenerate system: smallest Gram eigenvalue {:e}; eigenvalue bounds are -inf",
                    spectrum.smallest()
                );
                return Ok(EXIT_DEGENERATE);
            }
            Ok(EXIT_OK)
        }

        Command::Witness {
            instance,
            verify,
            trace,
            starts,
            seed,
            threads,
            output,
        } => {
            let (file, x) = load(&instance)?;
            let mut witness = find_witness(&x)?;
            let mut report = ReportFile::new("witness");
            report.instance = Some(InstanceEcho::from(&file));
            let mut code = EXIT_OK;
            if verify {
                let cfg = OracleConfig {
                    starts,
                    seed,
                    threads,
                    ..Default::default()
                };
                let check = verify_witness(&x, &witness)?;
                let oracle = sup_product(&x, &cfg)?;
                let (b, w, o) = (
                    check.log_bound.log(),
                    check.log_product.log(),
                    oracle.log_value.log(),
                );
                let sandwich_ok = b - SANDWICH_TOL <= w && w <= o + SANDWICH_TOL;
                if !(check.passed && sandwich_ok) {
                    eprintln!("verification failed: bound {b}, witness {w}, oracle {o}");
                    code = EXIT_NUMERICAL;
                }
                report.verification = Some(Verification {
                    check,
                    oracle,
                    sandwich_ok,
                    tolerance: SANDWICH_TOL,
                });
            }
            if !trace {
                witness.trace.clear();
            }
            report.witness = Some(witness);
            finish(report, started, output.as_deref())?;
            Ok(code)
        }

        Command::Oracle {
            instance,
            starts,
            seed,
            method,
            grid_points,
            threads,
            output,
        } => {
            let (file, x) = load(&instance)?;
            let result = match method {
                OracleKind::Gradient => sup_product(
                    &x,
                    &OracleConfig {
                        starts,
                        seed,
                        threads,
                        ..Default::default()
                    },
                )?,
                OracleKind::Grid => grid_oracle_2d(&x, grid_points)?,
                OracleKind::MonteCarlo => monte_carlo_oracle(&x, starts, seed)?,
            };
            let mut report = ReportFile::new("oracle");
            report.instance = Some(InstanceEcho::from(&file));
            report.oracle = Some(result);
            finish(report, started, output.as_deref())?;
            Ok(EXIT_OK)
        }

        Command::Explore {
            n,
            budget,
            seed,
            threads,
            output,
        } => {
            let settings = ExplorerConfig {
                threads,
                ..Default::default()
            };
            let result = explore_with(n, budget, seed, &settings)?;
            let anomaly = result.anomaly;
            if anomaly {
                eprintln!(
                    "ANOMALY: verified normalized value {} is below 1 at n = {n}",
                    result.normalized_value
                );
            }
            let mut report = ReportFile::new("explore");
            report.explorer = Some(result);
            finish(report, started, output.as_deref())?;
            Ok(if anomaly { EXIT_ANOMALY } else { EXIT_OK })
        }

        Command::Gen { n, seed, kind, output } => {
            let file = generate(n, seed, kind)?;
            emit(&to_json(&file)?, output.as_deref())?;
            Ok(EXIT_OK)
        }

        Command::SliceDemo { k, seed, rows, output } => {
            let table = slice_table(k, seed, rows)?;
            let mut report = ReportFile::new("slice-demo");
            report.slice_table = Some(table);
            finish(report, started, output.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

/// Measured versus predicted slice volume factors on a seeded random
/// ellipsoid, at offsets spread over `[-1.2, 1.2] V/S`.
pub fn slice_table(k: usize, seed: u64, rows: usize) -> Result<SliceTable, CliError> {
    if k < 2 {
        return Err(CliError::input("slice-demo needs k >= 2"));
    }
    if rows < 1 {
        return Err(CliError::input("slice-demo needs at least one row"));
    }
    let mut rng = sampling::rng(seed);
    let a = sampling::conditioned_matrix(&mut rng, k, 10.0);
    let c: DVector<f64> = sampling::gaussian_vector(&mut rng, k);
    let e = Ellipsoid::from_linear_image(&a, c)?;
    let ck = e.center()[k - 1];
    let v = e.volume_factor();
    let s = e
        .slice(ck)
        .ok_or_else(|| CliError::numerical("central slice is empty"))?
        .volume_factor();

    let mut table_rows = Vec::with_capacity(rows);
    for i in 0..rows {
        let fraction = -1.2 + 2.4 * (i as f64 + 0.5) / rows as f64;
        if (fraction.abs() - 1.0).abs() < 1e-6 {
            continue;
        }
        let height = fraction * v / s;
        let measured = e.slice(ck + height).map_or(0.0, |sl| sl.volume_factor());
        let formula = slice_volume_formula(v, s, height, k);
        let relative_error = if formula > 0.0 {
            (measured - formula).abs() / formula
        } else {
            measured
        };
        table_rows.push(SliceRow {
            fraction,
            height,
            measured,
            formula,
            relative_error,
        });
    }
    let max_relative_error = table_rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(SliceTable {
        k,
        seed,
        center: e.center().iter().copied().collect(),
        shape: e.shape().row_iter().map(|r| r.iter().copied().collect()).collect(),
        volume_factor: v,
        central_slice_factor: s,
        rows: table_rows,
        max_relative_error,
    })
}
