//! Ellipsoids as quadratic forms, their volume factors, slicing by
//! hyperplanes `{z_k = t}`, and the hyperbolic-cross regions `H_alpha`.
//!
//! An [`Ellipsoid`] is `{z : (z - c)^T M (z - c) <= 1}` with `M` symmetric
//! positive definite. Volumes are always *volume factors*: the volume divided
//! by the volume of the unit ball of the same dimension, so for `E = A[B^k]`
//! the factor is `|det A|`. The unit-ball constant never has to be computed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::logspace::{log_abs_product, LogValue};

/// Absolute entrywise tolerance on `M - M^T`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Cholesky pivots must satisfy `L_ii^2 >= PIVOT_TOL * max_i M_ii`.
pub const PIVOT_TOL: f64 = 1e-12;
/// Minimum `sigma_min / sigma_max` accepted by [`Ellipsoid::from_linear_image`].
pub const RANK_TOL: f64 = 1e-10;
/// Slices with `rho >= 1 - EMPTY_SLICE_TOL` are reported as empty.
pub const EMPTY_SLICE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    // lower Cholesky factor of `shape`
    chol: DMatrix<f64>,
}

impl Ellipsoid {
    /// Builds `{z : (z - center)^T shape (z - center) <= 1}` after checking
    /// dimensions, symmetry and positive definiteness.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let k = center.len();
        if k == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if shape.nrows() != k || shape.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: shape.nrows().max(shape.ncols()),
            });
        }
        if center.iter().chain(shape.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let asymmetry = (&shape - shape.transpose()).amax();
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let chol = cholesky_lower(&shape).ok_or(Error::NotPositiveDefinite)?;
        Ok(Ellipsoid {
            center,
            shape,
            chol,
        })
    }

    /// The ellipsoid `{center + A u : |u| <= 1}`, whose shape is `(A A^T)^{-1}`.
    pub fn from_linear_image(a: &DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        let k = center.len();
        if a.nrows() != k || a.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: a.nrows().max(a.ncols()),
            });
        }
        let sv = a.singular_values();
        let ratio = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
        if !(ratio > RANK_TOL) {
            return Err(Error::DegenerateTransform { ratio });
        }
        let inv = a
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::DegenerateTransform { ratio })?;
        // (A A^T)^{-1} = A^{-T} A^{-1}
        let m = inv.tr_mul(&inv);
        let shape = (&m + m.transpose()) * 0.5;
        Ellipsoid::new(center, shape)
    }

    pub fn unit_ball(k: usize) -> Self {
        Ellipsoid::new(DVector::zeros(k), DMatrix::identity(k, k))
            .expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `(z - c)^T M (z - c)`; at most 1 inside the ellipsoid.
    pub fn form_value(&self, z: &DVector<f64>) -> f64 {
        let d = z - &self.center;
        // |L^T d|^2 keeps the value nonnegative under rounding
        (self.chol.transpose() * d).norm_squared()
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        self.form_value(z) <= 1.0 + tol
    }

    /// `ln V` with `V = vol(E) / vol(B^k) = det(M)^{-1/2}`.
    pub fn log_volume_factor(&self) -> LogValue {
        let log_det_half: f64 = self.chol.diagonal().iter().map(|d| d.ln()).sum();
        LogValue::from_log(-log_det_half)
    }

    /// `V` in linear scale. Saturates to 0 or infinity outside the `f64` range;
    /// use [`Ellipsoid::log_volume_factor`] in high dimension.
    pub fn volume_factor(&self) -> f64 {
        self.log_volume_factor().log().exp()
    }

    /// Intersection with `{z_k = t}`, expressed in the first `k - 1`
    /// coordinates. `None` when the slice is empty or a single point.
    ///
    /// With `M = [[M11, m], [m^T, mu]]` and `d = t - c_k` the slice has center
    /// `c' = c_{1..k-1} - d M11^{-1} m` and shape `M11 / (1 - rho)` where
    /// `rho = d^2 (mu - m^T M11^{-1} m)`. Both `M11^{-1} m` and the Schur
    /// complement come straight out of the Cholesky factor of `M`.
    pub fn slice(&self, t: f64) -> Option<Ellipsoid> {
        let k = self.dim();
        assert!(k >= 2, "cannot slice a one-dimensional ellipsoid");
        let j = k - 1;
        // L = [[L11, 0], [l^T, lambda]]: M11 = L11 L11^T, m = L11 l,
        // schur = lambda^2, M11^{-1} m = L11^{-T} l.
        let l11 = self.chol.view((0, 0), (j, j)).clone_owned();
        let l_row = self.chol.view((j, 0), (1, j)).transpose();
        let lambda = self.chol[(j, j)];
        let offset_dir = l11
            .tr_solve_lower_triangular(&l_row)
            .expect("Cholesky factor has a nonzero diagonal");

        let d = t - self.center[j];
        let rho = d * d * lambda * lambda;
        if !(rho < 1.0 - EMPTY_SLICE_TOL) {
            return None;
        }
        let shrink = 1.0 - rho;
        let center = self.center.rows(0, j) - offset_dir * d;
        let shape = self.shape.view((0, 0), (j, j)) / shrink;
        let chol = l11 / shrink.sqrt();
        Some(Ellipsoid {
            center,
            shape,
            chol,
        })
    }

    /// Same ellipsoid shifted by `w`.
    pub fn translate(&self, w: &DVector<f64>) -> Ellipsoid {
        Ellipsoid {
            center: &self.center + w,
            shape: self.shape.clone(),
            chol: self.chol.clone(),
        }
    }
}

/// Lower Cholesky factor with the relative pivot test; `None` if `m` is not
/// (numerically) positive definite.
fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let max_diag = m.diagonal().max();
    if !(max_diag > 0.0) {
        return None;
    }
    let l = m.clone().cholesky()?.unpack();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    (min_pivot >= PIVOT_TOL * max_diag).then_some(l)
}

/// Volume factor of the slice at offset `h` from the center of an ellipsoid
/// in `R^k` with volume factor `v` whose central slice has factor `s`:
/// `s (1 - (s h / v)^2)^{(k-1)/2}` for `|h| <= v/s`, and 0 beyond.
///
/// The result depends only on `(v, s, h)`, not on the shape of the ellipsoid.
pub fn slice_volume_formula(v: f64, s: f64, h: f64, k: usize) -> f64 {
    assert!(v > 0.0 && s > 0.0, "volume factors must be positive");
    assert!(k >= 2);
    let r = s * h / v;
    if r.abs() > 1.0 {
        return 0.0;
    }
    s * (1.0 - r * r).powf((k - 1) as f64 / 2.0)
}

/// Log-space form of [`slice_volume_formula`]; `h` is a plain length.
pub fn log_slice_volume_formula(log_v: f64, log_s: f64, h: f64, k: usize) -> LogValue {
    assert!(k >= 2);
    let r = h.abs() * (log_s - log_v).exp();
    if r > 1.0 {
        return LogValue::ZERO;
    }
    LogValue::from_log(log_s + 0.5 * (k - 1) as f64 * (-r * r).ln_1p())
}

/// `ln(alpha n^{-n/2})`, the threshold defining `H_alpha` in `R^n`.
pub fn h_alpha_log_threshold(log_alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    log_alpha - 0.5 * n * n.ln()
}

/// `z in H_alpha`, i.e. `|prod z_j| >= alpha n^{-n/2}` with `n = len(z)`.
pub fn h_alpha_contains(z: &[f64], alpha: f64) -> bool {
    assert!(alpha > 0.0, "alpha must be positive");
    h_alpha_contains_log(z, alpha.ln())
}

/// [`h_alpha_contains`] with `alpha` given as a logarithm.
pub fn h_alpha_contains_log(z: &[f64], log_alpha: f64) -> bool {
    assert!(!z.is_empty());
    log_abs_product(z) >= h_alpha_log_threshold(log_alpha, z.len())
}
