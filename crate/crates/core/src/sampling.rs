//! Seeded random draws used by the generators, the oracle starts and the
//! explorer. Everything goes through ChaCha8 so outputs are reproducible
//! across platforms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Uniform draw from the unit sphere in `R^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-8 {
            return g / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
pub fn orthogonal_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random `n x n` matrix `U diag(s) V^T` with singular values drawn
/// log-uniformly from `[1, max_condition]`, scaled by a random factor in
/// `[0.5, 2]`.
pub fn conditioned_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_condition: f64,
) -> DMatrix<f64> {
    assert!(max_condition >= 1.0);
    let u = orthogonal_matrix(rng, n);
    let v = orthogonal_matrix(rng, n);
    let scale: f64 = rng.random_range(0.5..2.0);
    let log_max = max_condition.ln();
    let s = DVector::from_fn(n, |_, _| scale * (rng.random::<f64>() * log_max).exp());
    u * DMatrix::from_diagonal(&s) * v.transpose()
}
