//! Constructive certificate for the geometric-mean bound.
//!
//! For a full-rank system `X`, the image `E = X[B^n]` of the unit ball is an
//! ellipsoid with volume factor `V = sqrt(prod lambda_j)`. Every ellipsoid in
//! `R^k` with volume factor `V` contains a point with `|prod z_j| >= V k^{-k/2}`,
//! found by slicing one coordinate at a time:
//!
//! 1. let `c_k` be the last coordinate of the center and `S` the volume factor
//!    of the central slice `{z_k = c_k}`;
//! 2. move to the slice at `z_k = c_k +- h` with `h = V / (S sqrt(k))`, on the
//!    side of the center's sign so that `|z_k| >= h`;
//! 3. that slice has volume factor `S (1 - 1/k)^{(k-1)/2}`, and
//!    `h S (1 - 1/k)^{(k-1)/2} (k-1)^{-(k-1)/2} = V k^{-k/2}`, so recursing on
//!    it keeps the product bound exact;
//! 4. in dimension one take the interval endpoint of largest modulus.
//!
//! The point `z` found this way satisfies `z = X y0` with `|y0| <= 1`, and
//! `y = y0 / |y0|` is the witness.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{h_alpha_contains_log, h_alpha_log_threshold, Ellipsoid};
use crate::logspace::{log_abs_product, LogValue};
use crate::spectrum::{geometric_bound, gram_spectrum, VectorSystem};

/// Allowed loss of the per-level product certificate, in log-space.
pub const LEVEL_TOL: f64 = 1e-8;
/// Membership tolerance for the descent point.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance of [`verify_witness`] on both the norm and the bound.
pub const VERIFY_TOL: f64 = 1e-8;

/// One step of the slicing descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// Dimension of the ellipsoid at this level.
    pub k: usize,
    /// Last coordinate of the center.
    pub center_last: f64,
    /// `ln V_k`.
    pub log_volume: LogValue,
    /// `ln S_k`, the central slice's volume factor; absent at the base level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_central_slice: Option<LogValue>,
    /// Offset from the center: `h_k` for `k >= 2`, the half-length at `k = 1`.
    pub height: f64,
    /// Chosen coordinate `z_k`.
    pub coordinate: f64,
    /// Whether the negative side was taken (center below zero).
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub point: DVector<f64>,
    /// Levels from dimension `k` down to 1.
    pub trace: Vec<LevelRecord>,
}

/// Finds `z in E` with `|prod z_j| >= V k^{-k/2}` by recursive slicing.
pub fn descend(e: &Ellipsoid) -> Result<Descent> {
    let dim = e.dim();
    let mut point = DVector::zeros(dim);
    let mut trace = Vec::with_capacity(dim);
    let mut current = e.clone();

    for k in (2..=dim).rev() {
        let kf = k as f64;
        let center_last = current.center()[k - 1];
        let flipped = center_last < 0.0;
        let sign = if flipped { -1.0 } else { 1.0 };

        let log_v = current.log_volume_factor();
        let central = current.slice(center_last).ok_or_else(|| {
            Error::NumericalFailure(format!("central slice at level {k} is empty"))
        })?;
        let log_s = central.log_volume_factor();
        let height = (log_v.log() - log_s.log() - 0.5 * kf.ln()).exp();
        let coordinate = center_last + sign * height;
        let next = current.slice(coordinate).ok_or_else(|| {
            Error::NumericalFailure(format!("slice at level {k} (h = {height:e}) is empty"))
        })?;

        // V_k k^{-k/2} <= |z_k| V_{k-1} (k-1)^{-(k-1)/2}
        let need = h_alpha_log_threshold(log_v.log(), k);
        let have = coordinate.abs().ln() + h_alpha_log_threshold(next.log_volume_factor().log(), k - 1);
        if !(have >= need - LEVEL_TOL) {
            return Err(Error::NumericalFailure(format!(
                "product certificate lost at level {k}: {have} < {need}"
            )));
        }

        point[k - 1] = coordinate;
        trace.push(LevelRecord {
            k,
            center_last,
            log_volume: log_v,
            log_central_slice: Some(log_s),
            height,
            coordinate,
            flipped,
        });
        current = next;
    }

    let c = current.center()[0];
    let log_v = current.log_volume_factor();
    let half = log_v.log().exp();
    let flipped = c < 0.0;
    let coordinate = if flipped { c - half } else { c + half };
    point[0] = coordinate;
    trace.push(LevelRecord {
        k: 1,
        center_last: c,
        log_volume: log_v,
        log_central_slice: None,
        height: half,
        coordinate,
        flipped,
    });

    if !e.contains(&point, MEMBERSHIP_TOL) {
        return Err(Error::NumericalFailure(format!(
            "descent point left the ellipsoid (form value {})",
            e.form_value(&point)
        )));
    }
    let need = h_alpha_log_threshold(e.log_volume_factor().log(), dim) + (-1e-10f64).ln_1p();
    if !(log_abs_product(point.iter()) >= need) {
        return Err(Error::NumericalFailure(
            "descent point misses the product threshold".into(),
        ));
    }
    Ok(Descent { point, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    /// Unit vector `y`.
    pub y: Vec<f64>,
    /// `<x_j, y>`.
    pub factors: Vec<f64>,
    pub log_product: LogValue,
    /// Geometric-mean bound `ln (prod lambda_j)^{1/2} n^{-n/2}`.
    pub log_bound: LogValue,
    /// `log_product - log_bound`.
    pub slack: f64,
    /// The descent point `z = X y0` before normalization.
    pub descent_point: Vec<f64>,
    /// `|y0|`, at most one.
    pub unnormalized_norm: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<LevelRecord>,
}

/// Builds a unit vector `y` with `|prod <x_j, y>| >= (prod lambda_j)^{1/2} n^{-n/2}`.
pub fn find_witness(x: &VectorSystem) -> Result<WitnessResult> {
    let n = x.n();
    let spectrum = gram_spectrum(x);
    if spectrum.rank_deficient {
        return Err(Error::DegenerateSystem {
            smallest_eigenvalue: spectrum.smallest(),
        });
    }
    let log_bound = geometric_bound(&spectrum);
    let xm = x.matrix();
    let e = Ellipsoid::from_linear_image(xm, DVector::zeros(n)).map_err(|err| match err {
        Error::DegenerateTransform { .. } => Error::DegenerateSystem {
            smallest_eigenvalue: spectrum.smallest(),
        },
        other => other,
    })?;
    let descent = descend(&e)?;
    let z = &descent.point;

    // y0 = X^{-1} z with one refinement step
    let lu = xm.clone().lu();
    let solve_failed = || Error::NumericalFailure("X is numerically singular".into());
    let mut y0 = lu.solve(z).ok_or_else(solve_failed)?;
    let residual = z - xm * &y0;
    y0 += lu.solve(&residual).ok_or_else(solve_failed)?;

    let norm0 = y0.norm();
    if !(norm0 <= 1.0 + MEMBERSHIP_TOL) {
        return Err(Error::NumericalFailure(format!(
            "preimage of the descent point has norm {norm0}"
        )));
    }
    let log_v = e.log_volume_factor().log();
    let image = xm * &y0;
    if !h_alpha_contains_log(image.as_slice(), log_v + (-1e-8f64).ln_1p()) {
        return Err(Error::NumericalFailure(
            "X y0 is not in H_V after the back-substitution".into(),
        ));
    }

    let y = y0 / norm0;
    let factors = xm * &y;
    let log_product = LogValue::from_log(log_abs_product(factors.iter()));
    Ok(WitnessResult {
        y: y.iter().copied().collect(),
        factors: factors.iter().copied().collect(),
        log_product,
        log_bound,
        slack: log_product.log() - log_bound.log(),
        descent_point: z.iter().copied().collect(),
        unnormalized_norm: norm0,
        trace: descent.trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub norm: f64,
    pub log_product: LogValue,
    pub log_bound: LogValue,
    pub slack: f64,
    pub norm_ok: bool,
    pub bound_ok: bool,
    pub passed: bool,
}

/// Recomputes the factors and the bound from scratch and checks the
/// certified inequality.
pub fn verify_witness(x: &VectorSystem, w: &WitnessResult) -> Result<WitnessCheck> {
    if w.y.len() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            found: w.y.len(),
        });
    }
    let y = DVector::from_column_slice(&w.y);
    let norm = y.norm();
    let log_product = LogValue::from_log(x.log_abs_product(&y));
    let log_bound = geometric_bound(&gram_spectrum(x));
    let slack = log_product.log() - log_bound.log();
    let norm_ok = (norm - 1.0).abs() <= VERIFY_TOL;
    let bound_ok = log_product.log() >= log_bound.log() - VERIFY_TOL;
    Ok(WitnessCheck {
        norm,
        log_product,
        log_bound,
        slack: if slack.is_nan() { 0.0 } else { slack },
        norm_ok,
        bound_ok,
        passed: norm_ok && bound_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use nalgebra::DMatrix;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn base_case_interval() {
        let d = descend(&Ellipsoid::unit_ball(1)).unwrap();
        assert_eq!(d.point.as_slice(), &[1.0]);
        let shifted = Ellipsoid::new(DVector::from_vec(vec![-2.0]), DMatrix::from_element(1, 1, 4.0)).unwrap();
        let d = descend(&shifted).unwrap();
        assert_eq!(d.point.as_slice(), &[-2.5]);
        assert!(d.trace[0].flipped);
    }

    #[test]
    fn unit_disk_hand_trace() {
        let d = descend(&Ellipsoid::unit_ball(2)).unwrap();
        assert!((d.point[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.point[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        let top = &d.trace[0];
        assert_eq!(top.k, 2);
        assert_eq!(top.log_volume.log(), 0.0);
        assert_eq!(top.log_central_slice.unwrap().log(), 0.0);
        assert!((top.height - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(!top.flipped);
    }

    #[test]
    fn shifted_disk_gains_slack() {
        let e = Ellipsoid::new(DVector::from_vec(vec![0.0, 5.0]), DMatrix::identity(2, 2)).unwrap();
        let d = descend(&e).unwrap();
        assert!((d.point[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.point[1] - (5.0 + FRAC_1_SQRT_2)).abs() < 1e-14);
        let product = (d.point[0] * d.point[1]).abs();
        assert!(product > 3.0 * 0.5);
        assert!(e.contains(&d.point, 1e-12));
    }

    #[test]
    fn orthonormal_three_by_hand() {
        // V = 1 at every level with h_3 = 1/sqrt 3; the remaining disk has
        // radius sqrt(2/3), giving h_2 = sqrt(2/3)/sqrt 2 = 1/sqrt 3 and a
        // final half-length of 1/sqrt 3.
        let w = find_witness(&VectorSystem::orthonormal(3)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        for v in &w.y {
            assert!((v.abs() - r).abs() < 1e-12, "{:?}", w.y);
        }
        assert!((w.trace[0].height - r).abs() < 1e-14);
        assert!((w.trace[1].height - r).abs() < 1e-14);
        assert!((w.trace[2].height - r).abs() < 1e-14);
        assert!(w.slack.abs() <= 1e-9);
    }

    #[test]
    fn orthonormal_is_tight() {
        for n in 2..=20 {
            let w = find_witness(&VectorSystem::orthonormal(n)).unwrap();
            let want = -0.5 * n as f64 * (n as f64).ln();
            assert!((w.log_product.log() - want).abs() < 1e-9, "n={n}");
            assert!(w.slack >= -1e-9 && w.slack <= 1e-9);
        }
    }

    #[test]
    fn repeated_vector_is_degenerate() {
        let x = VectorSystem::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(find_witness(&x), Err(Error::DegenerateSystem { .. })));
    }

    #[test]
    fn random_witnesses_certify() {
        let mut rng = sampling::rng(17);
        for i in 0..60 {
            let n = 2 + i % 19;
            let x = VectorSystem::random(&mut rng, n);
            let w = find_witness(&x).unwrap();
            assert!(w.slack >= -1e-8, "n={n} slack={}", w.slack);
            let y = DVector::from_column_slice(&w.y);
            assert!((y.norm() - 1.0).abs() < 1e-10);
            assert!((w.log_product.log() - log_abs_product(w.factors.iter())).abs() < 1e-10);
            // X y0 reproduces the descent point
            let y0 = y * w.unnormalized_norm;
            let z = x.matrix() * y0;
            for (a, b) in z.iter().zip(&w.descent_point) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!(verify_witness(&x, &w).unwrap().passed);
        }
    }

    #[test]
    fn per_level_certificate_and_closed_form() {
        use crate::geometry::log_slice_volume_formula;
        let mut rng = sampling::rng(23);
        for n in 2..=12 {
            let x = VectorSystem::random(&mut rng, n);
            let w = find_witness(&x).unwrap();
            for pair in w.trace.windows(2) {
                let (upper, lower) = (&pair[0], &pair[1]);
                let k = upper.k;
                let need = h_alpha_log_threshold(upper.log_volume.log(), k);
                let have = upper.coordinate.abs().ln() + h_alpha_log_threshold(lower.log_volume.log(), k - 1);
                assert!(have >= need - 1e-8);
                // re-derived V_{k-1} matches S (1 - 1/k)^{(k-1)/2}
                let predicted = log_slice_volume_formula(
                    upper.log_volume.log(),
                    upper.log_central_slice.unwrap().log(),
                    upper.height,
                    k,
                );
                assert!((predicted.log() - lower.log_volume.log()).abs() < 1e-9);
                assert!(upper.coordinate.abs() >= upper.height * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn verify_examples() {
        let x = VectorSystem::from_angle(PI / 3.0);
        let w = find_witness(&x).unwrap();
        let check = verify_witness(&x, &w).unwrap();
        assert!(check.passed);
        assert!(check.log_product.log() >= (0.75f64.sqrt() / 2.0).ln() - 1e-8);

        let mut scaled = w.clone();
        scaled.y.iter_mut().for_each(|v| *v *= 0.9);
        let check = verify_witness(&x, &scaled).unwrap();
        assert!(!check.norm_ok);
        assert!(!check.passed);

        assert!(verify_witness(&VectorSystem::orthonormal(3), &w).is_err());
    }
}
