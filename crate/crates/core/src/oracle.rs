//! Numerical estimates of `sup_{|y|=1} |prod_j <x_j, y>|`.
//!
//! The main estimator is multistart projected gradient ascent on
//! `f(y) = sum_j ln |<x_j, y>|` over the sphere. All estimates are lower
//! bounds on the supremum: they are values attained at explicit unit vectors.

use std::f64::consts::PI;
use std::thread;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_abs_product, LogValue};
use crate::sampling;
use crate::spectrum::VectorSystem;
use crate::witness::find_witness;

/// Starts with a factor this close to zero are redrawn.
pub const ZERO_FACTOR_TOL: f64 = 1e-12;
const MAX_REDRAWS: usize = 64;
// Sufficient-increase fraction; 1/2 rejects steps longer than the Newton
// step on a locally quadratic objective, which stops step 1 from zig-zagging.
const ARMIJO: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Number of random starts (the witness and the all-ones direction are
    /// always added on top).
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop once the projected gradient norm falls below this.
    pub gradient_tol: f64,
    /// Worker threads; the result does not depend on it.
    pub threads: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            starts: 32,
            seed: 0,
            max_iterations: 500,
            gradient_tol: 1e-10,
            threads: 1,
        }
    }
}

impl OracleConfig {
    pub fn with_starts(starts: usize, seed: u64) -> Self {
        OracleConfig {
            starts,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.starts < 1 {
            return Err(Error::InvalidConfig("oracle needs at least one start".into()));
        }
        if self.threads < 1 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    MultistartGradient,
    Grid2d,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_y: Vec<f64>,
    /// `ln |prod_j <x_j, best_y>|`, recomputed from `best_y`.
    pub log_value: LogValue,
    pub starts: usize,
    pub converged: usize,
    pub method: OracleMethod,
}

impl OracleResult {
    fn new(x: &VectorSystem, y: DVector<f64>, starts: usize, converged: usize, method: OracleMethod) -> Self {
        let y = &y / y.norm();
        OracleResult {
            log_value: LogValue::from_log(x.log_abs_product(&y)),
            best_y: y.iter().copied().collect(),
            starts,
            converged,
            method,
        }
    }
}

fn objective(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    log_abs_product((x * y).iter())
}

#[derive(Debug, Clone)]
struct LocalMax {
    y: DVector<f64>,
    value: f64,
    converged: bool,
}

/// Projected gradient ascent with backtracking from step 1, renormalizing
/// onto the sphere after each step.
///
/// Stops when the projected gradient is below `gradient_tol`, or when the
/// gain a step could bring is below the rounding level of `f`. In the latter
/// case the start counts as converged if the gradient is below
/// `sqrt(gradient_tol)`.
fn ascend(x: &DMatrix<f64>, start: DVector<f64>, cfg: &OracleConfig) -> LocalMax {
    let mut y = start;
    let mut value = objective(x, &y);
    let mut converged = false;
    if !value.is_finite() {
        return LocalMax { y, value, converged };
    }
    'outer: for _ in 0..cfg.max_iterations {
        let factors = x * &y;
        let inv = factors.map(|f| 1.0 / f);
        let grad = x.tr_mul(&inv);
        let tangent = &grad - &y * grad.dot(&y);
        let slope = tangent.norm_squared();
        if slope.sqrt() < cfg.gradient_tol {
            converged = true;
            break;
        }
        let resolution = f64::EPSILON * (1.0 + value.abs());
        let mut step = 1.0;
        loop {
            let mut cand = &y + &tangent * step;
            cand /= cand.norm();
            let v = objective(x, &cand);
            if v > value && v >= value + ARMIJO * step * slope {
                y = cand;
                value = v;
                break;
            }
            if step * slope < resolution || step < MIN_STEP {
                converged = slope.sqrt() < cfg.gradient_tol.sqrt();
                break 'outer;
            }
            step *= 0.5;
        }
    }
    LocalMax { y, value, converged }
}

fn has_zero_factor(x: &DMatrix<f64>, y: &DVector<f64>) -> bool {
    (x * y).iter().any(|f| f.abs() < ZERO_FACTOR_TOL)
}

fn random_start(x: &DMatrix<f64>, seed: u64, index: usize) -> DVector<f64> {
    let n = x.nrows();
    let mut rng = sampling::stream_rng(seed, index as u64);
    let mut y = sampling::unit_vector(&mut rng, n);
    for _ in 0..MAX_REDRAWS {
        if !has_zero_factor(x, &y) {
            break;
        }
        y = sampling::unit_vector(&mut rng, n);
    }
    y
}

/// Runs `ascend` on every start, possibly on several threads, and returns
/// the results in start order.
fn run_starts(x: &DMatrix<f64>, starts: &[DVector<f64>], cfg: &OracleConfig) -> Vec<LocalMax> {
    let threads = cfg.threads.min(starts.len()).max(1);
    if threads == 1 {
        return starts.iter().map(|s| ascend(x, s.clone(), cfg)).collect();
    }
    let chunk = starts.len().div_ceil(threads);
    thread::scope(|scope| {
        let handles: Vec<_> = starts
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| ascend(x, s.clone(), cfg)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("oracle worker panicked"))
            .collect()
    })
}

/// Multistart estimate of the supremum: `cfg.starts` seeded random starts,
/// then the witness vector (full-rank systems only) and the normalized
/// all-ones vector.
pub fn sup_product(x: &VectorSystem, cfg: &OracleConfig) -> Result<OracleResult> {
    sup_product_with_starts(x, cfg, &[])
}

/// [`sup_product`] with additional caller-supplied starts appended after the
/// standard ones.
pub fn sup_product_with_starts(
    x: &VectorSystem,
    cfg: &OracleConfig,
    extra: &[DVector<f64>],
) -> Result<OracleResult> {
    cfg.validate()?;
    let n = x.n();
    let xm = x.matrix();
    let mut starts: Vec<DVector<f64>> = (0..cfg.starts).map(|i| random_start(xm, cfg.seed, i)).collect();
    if let Ok(w) = find_witness(x) {
        starts.push(DVector::from_vec(w.y));
    }
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    if !has_zero_factor(xm, &ones) {
        starts.push(ones);
    }
    for e in extra {
        if e.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.len(),
            });
        }
        let norm = e.norm();
        if norm > 0.0 && norm.is_finite() {
            starts.push(e / norm);
        }
    }

    let results = run_starts(xm, &starts, cfg);
    let converged = results.iter().filter(|r| r.converged).count();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.value > results[best].value {
            best = i;
        }
    }
    Ok(OracleResult::new(
        x,
        results[best].y.clone(),
        results.len(),
        converged,
        OracleMethod::MultistartGradient,
    ))
}

/// Brute-force estimate for `n = 2`: scan `y = (cos a, sin a)` over a uniform
/// grid of `[0, pi)` and refine around the best grid point by golden-section
/// search.
pub fn grid_oracle_2d(x: &VectorSystem, grid_points: usize) -> Result<OracleResult> {
    if x.n() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: x.n(),
        });
    }
    if grid_points < 1000 {
        return Err(Error::InvalidConfig("grid_oracle_2d needs at least 1000 points".into()));
    }
    let xm = x.matrix();
    let f = |a: f64| objective(xm, &DVector::from_vec(vec![a.cos(), a.sin()]));
    let step = PI / grid_points as f64;
    let (mut best_a, mut best_v) = (0.0, f(0.0));
    for i in 1..grid_points {
        let a = i as f64 * step;
        let v = f(a);
        if v > best_v {
            best_a = a;
            best_v = v;
        }
    }

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    if fm > best_v {
        best_a = mid;
    }
    Ok(OracleResult::new(
        x,
        DVector::from_vec(vec![best_a.cos(), best_a.sin()]),
        grid_points,
        1,
        OracleMethod::Grid2d,
    ))
}

/// Best of `samples` uniform random unit vectors.
pub fn monte_carlo_oracle(x: &VectorSystem, samples: usize, seed: u64) -> Result<OracleResult> {
    if samples < 1 {
        return Err(Error::InvalidConfig("monte_carlo_oracle needs at least one sample".into()));
    }
    let xm = x.matrix();
    let mut rng = sampling::rng(seed);
    let mut best = sampling::unit_vector(&mut rng, x.n());
    let mut best_v = objective(xm, &best);
    for _ in 1..samples {
        let y = sampling::unit_vector(&mut rng, x.n());
        let v = objective(xm, &y);
        if v > best_v {
            best = y;
            best_v = v;
        }
    }
    Ok(OracleResult::new(x, best, samples, 0, OracleMethod::MonteCarlo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_n2(theta: f64) -> f64 {
        // max_a |cos a cos(theta - a)| = (1 + |cos theta|) / 2
        ((1.0 + theta.cos().abs()) / 2.0).ln()
    }

    #[test]
    fn orthonormal_two() {
        let r = sup_product(&VectorSystem::orthonormal(2), &OracleConfig::default()).unwrap();
        assert!((r.log_value.log() - 0.5f64.ln()).abs() < 1e-9);
        for v in &r.best_y {
            assert!((v.abs() - 0.5f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn angle_pi_over_3() {
        let x = VectorSystem::from_angle(PI / 3.0);
        let r = sup_product(&x, &OracleConfig::default()).unwrap();
        assert!((r.log_value.log().exp() - 0.75).abs() < 1e-9);
        let g = grid_oracle_2d(&x, 10_000).unwrap();
        assert!((g.log_value.log().exp() - 0.75).abs() < 1e-8);
    }

    #[test]
    fn zero_starts_rejected() {
        let cfg = OracleConfig::with_starts(0, 1);
        assert!(matches!(
            sup_product(&VectorSystem::orthonormal(2), &cfg),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            monte_carlo_oracle(&VectorSystem::orthonormal(2), 0, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn grid_examples() {
        let g = grid_oracle_2d(&VectorSystem::orthonormal(2), 10_000).unwrap();
        assert!((g.log_value.log().exp() - 0.5).abs() < 1e-8);
        let theta = 1e-4;
        let g = grid_oracle_2d(&VectorSystem::from_angle(theta), 10_000).unwrap();
        assert!((g.log_value.log().exp() - (1.0 + theta.cos()) / 2.0).abs() < 1e-8);
        assert!(matches!(
            grid_oracle_2d(&VectorSystem::orthonormal(3), 10_000),
            Err(Error::WrongDimension { .. })
        ));
        assert!(matches!(
            grid_oracle_2d(&VectorSystem::orthonormal(2), 10),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn gradient_and_grid_agree_on_random_angles() {
        let mut rng = sampling::rng(31);
        for _ in 0..30 {
            let theta = rand::Rng::random_range(&mut rng, 0.0..PI);
            let x = VectorSystem::from_angle(theta);
            let a = sup_product(&x, &OracleConfig::with_starts(16, 5)).unwrap();
            let b = grid_oracle_2d(&x, 4000).unwrap();
            assert!((a.log_value.log() - b.log_value.log()).abs() < 1e-6);
            assert!((a.log_value.log() - closed_form_n2(theta)).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_finite() {
        let x = VectorSystem::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let a = monte_carlo_oracle(&x, 1, 9).unwrap();
        let b = monte_carlo_oracle(&x, 1, 9).unwrap();
        assert_eq!(a, b);
        let r = monte_carlo_oracle(&x, 100, 9).unwrap();
        assert!(r.log_value.log().is_finite());
        let o = monte_carlo_oracle(&VectorSystem::orthonormal(2), 100_000, 3).unwrap();
        assert!(o.log_value.log().exp() > 0.49);
    }

    #[test]
    fn result_invariants_and_threads() {
        let x = VectorSystem::random(&mut sampling::rng(4), 6);
        let seq = sup_product(&x, &OracleConfig::with_starts(12, 2)).unwrap();
        let par = sup_product(
            &x,
            &OracleConfig {
                threads: 3,
                ..OracleConfig::with_starts(12, 2)
            },
        )
        .unwrap();
        assert_eq!(seq, par);
        let y = DVector::from_column_slice(&seq.best_y);
        assert!((y.norm() - 1.0).abs() < 1e-10);
        assert!((x.log_abs_product(&y) - seq.log_value.log()).abs() < 1e-10);
        assert_eq!(seq.starts, 14);
    }

    #[test]
    fn more_starts_never_hurt() {
        let x = VectorSystem::random(&mut sampling::rng(8), 7);
        let mut last = f64::NEG_INFINITY;
        for starts in [1, 2, 4, 8, 16, 32] {
            let v = sup_product(&x, &OracleConfig::with_starts(starts, 11)).unwrap().log_value.log();
            assert!(v >= last);
            last = v;
        }
    }
}
