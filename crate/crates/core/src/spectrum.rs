//! Problem instances (`n` unit vectors in `R^n`), their Gram spectra, and the
//! closed-form eigenvalue lower bounds on `sup_{|y|=1} |<x_1,y> ... <x_n,y>|`.
//!
//! With `lambda_1 <= ... <= lambda_n` the Gram eigenvalues (which sum to `n`)
//! the bounds, all carried as natural logarithms, are
//!
//! * smallest eigenvalue: `(lambda_1 / n)^{n/2}`
//! * harmonic mean:       `(n / sum 1/lambda_j)^{n/2} n^{-n/2}`
//! * geometric mean:      `(prod lambda_j)^{1/2} n^{-n/2}`
//!
//! and they never exceed `n^{-n/2}`, the value an orthonormal system attains.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{LogValue, Quantity};
use crate::sampling;

/// Input rows with `| |x| - 1 | <= UNIT_NORM_TOL` are renormalized; others
/// are rejected.
pub const UNIT_NORM_TOL: f64 = 1e-6;
/// Gram eigenvalues below this are clamped to zero and flag rank deficiency.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// `n` unit vectors in `R^n`, stored as the rows of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSystem {
    x: DMatrix<f64>,
}

impl VectorSystem {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotSquare { rows: 0, len: 0 });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    len: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Takes the rows of `x` as the vectors, renormalizing each per
    /// [`UNIT_NORM_TOL`].
    pub fn from_matrix(mut x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != x.ncols() || x.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: x.nrows(),
                len: x.ncols(),
            });
        }
        for i in 0..x.nrows() {
            let mut row = x.row_mut(i);
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i });
            }
            let norm = row.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NonUnitVector { row: i, norm });
            }
            // rows already unit to rounding are left bit-for-bit unchanged
            if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                row /= norm;
            }
        }
        Ok(VectorSystem { x })
    }

    /// The standard basis `e_1, ..., e_n`.
    pub fn orthonormal(n: usize) -> Self {
        assert!(n >= 1);
        VectorSystem {
            x: DMatrix::identity(n, n),
        }
    }

    /// `x_1 = (1, 0)`, `x_2 = (cos theta, sin theta)`.
    pub fn from_angle(theta: f64) -> Self {
        VectorSystem {
            x: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, theta.cos(), theta.sin()]),
        }
    }

    /// `n` independent uniform draws from the unit sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        assert!(n >= 1);
        let mut x = DMatrix::zeros(n, n);
        for i in 0..n {
            x.set_row(i, &sampling::unit_vector(rng, n).transpose());
        }
        VectorSystem { x }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// The matrix `X` whose rows are the vectors.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn vector(&self, j: usize) -> DVector<f64> {
        self.x.row(j).transpose()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.x.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `<x_j, y>` for every `j`, i.e. `X y`.
    pub fn factors(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.x * y
    }

    /// `ln |prod_j <x_j, y>|`.
    pub fn log_abs_product(&self, y: &DVector<f64>) -> f64 {
        crate::logspace::log_abs_product(self.factors(y).iter())
    }

    /// Applies the orthogonal map `q` to every vector.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(&self.x * q.transpose())
    }

    /// Reorders the vectors: row `i` of the result is row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        VectorSystem {
            x: DMatrix::from_fn(n, n, |i, j| self.x[(perm[i], j)]),
        }
    }
}

impl Serialize for VectorSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VectorSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        VectorSystem::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSpectrum {
    pub gram: DMatrix<f64>,
    /// Ascending, with values below [`EIGEN_CLAMP`] set to zero.
    pub eigenvalues: DVector<f64>,
    /// `ln det G`; `-inf` when rank deficient.
    pub log_det: LogValue,
    pub rank_deficient: bool,
}

impl GramSpectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn smallest(&self) -> f64 {
        self.eigenvalues[0]
    }
}

pub fn gram_spectrum(x: &VectorSystem) -> GramSpectrum {
    let m = x.matrix();
    let g = m * m.transpose();
    let gram = (&g + g.transpose()) * 0.5;
    // The eigenvalues of G = X X^T are the squared singular values of X.
    // Taking them from X keeps small eigenvalues accurate to relative
    // precision ~eps/sigma instead of ~eps/lambda. Rows are put in a canonical
    // (lexicographic) order first so that permuting the input is bit-for-bit
    // invariant.
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| {
        m.row(a)
            .iter()
            .zip(m.row(b).iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let canonical = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(order[i], j)]);
    let mut eig: Vec<f64> = canonical.singular_values().iter().map(|s| s * s).collect();
    eig.sort_by(f64::total_cmp);
    for v in eig.iter_mut() {
        if *v < EIGEN_CLAMP {
            *v = 0.0;
        }
    }
    let rank_deficient = eig[0] == 0.0;
    let log_det = if rank_deficient {
        LogValue::ZERO
    } else {
        LogValue::from_log(eig.iter().map(|l| l.ln()).sum())
    };
    GramSpectrum {
        gram,
        eigenvalues: DVector::from_vec(eig),
        log_det,
        rank_deficient,
    }
}

fn half_n_log_n(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * n.ln()
}

/// `ln (lambda_1 / n)^{n/2}`.
pub fn marcus_bound(s: &GramSpectrum) -> LogValue {
    let n = s.n();
    if s.rank_deficient {
        return LogValue::ZERO;
    }
    LogValue::from_log(0.5 * n as f64 * s.smallest().ln() - half_n_log_n(n))
}

/// `ln (n / sum_j 1/lambda_j)^{n/2} n^{-n/2}`.
pub fn harmonic_bound(s: &GramSpectrum) -> LogValue {
    let n = s.n();
    if s.rank_deficient {
        return LogValue::ZERO;
    }
    let inv_sum: f64 = s.eigenvalues.iter().map(|l| 1.0 / l).sum();
    let nf = n as f64;
    LogValue::from_log(0.5 * nf * (nf.ln() - inv_sum.ln()) - half_n_log_n(n))
}

/// `ln (prod_j lambda_j)^{1/2} n^{-n/2}`.
pub fn geometric_bound(s: &GramSpectrum) -> LogValue {
    if s.rank_deficient {
        return LogValue::ZERO;
    }
    LogValue::from_log(0.5 * s.log_det.log() - half_n_log_n(s.n()))
}

/// `ln n^{-n/2}`, the value at an orthonormal system.
pub fn conjecture_value(n: usize) -> LogValue {
    LogValue::from_log(-half_n_log_n(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub rank_deficient: bool,
    pub marcus_bound: Quantity,
    pub harmonic_bound: Quantity,
    pub geometric_bound: Quantity,
    /// `n^{-n/2}`.
    pub conjecture_value: Quantity,
    /// `n^{n/2}`, the known lower estimate of the polarization constant.
    pub polarization_lower: Quantity,
    /// `2^{n/2 - 1} n^{n/2}`, the known upper estimate.
    pub polarization_upper: Quantity,
}

impl BoundsReport {
    pub fn from_spectrum(s: &GramSpectrum) -> Self {
        let n = s.n();
        let nf = n as f64;
        BoundsReport {
            n,
            eigenvalues: s.eigenvalues.iter().copied().collect(),
            rank_deficient: s.rank_deficient,
            marcus_bound: marcus_bound(s).into(),
            harmonic_bound: harmonic_bound(s).into(),
            geometric_bound: geometric_bound(s).into(),
            conjecture_value: conjecture_value(n).into(),
            polarization_lower: LogValue::from_log(half_n_log_n(n)).into(),
            polarization_upper: LogValue::from_log((0.5 * nf - 1.0) * 2f64.ln() + half_n_log_n(n))
                .into(),
        }
    }

    /// Bounds in ascending order: smallest eigenvalue, harmonic, geometric,
    /// orthonormal value.
    pub fn chain(&self) -> [LogValue; 4] {
        [
            self.marcus_bound.log,
            self.harmonic_bound.log,
            self.geometric_bound.log,
            self.conjecture_value.log,
        ]
    }
}

pub fn bounds_report(x: &VectorSystem) -> BoundsReport {
    BoundsReport::from_spectrum(&gram_spectrum(x))
}
