//! Search for systems with a small normalized supremum
//! `v(X) = n^{n/2} sup_{|y|=1} |prod_j <x_j, y>|`.
//!
//! An orthonormal system has `v = 1`, and `inf_X v(X) = 1` is the open
//! conjecture this probes. Scores from a cheap inner oracle are biased low
//! (the inner max can be missed), so the final candidates are re-scored with
//! a much larger number of starts before anything is reported.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{sup_product, sup_product_with_starts, OracleConfig};
use crate::sampling::{self, SeededRng};
use crate::spectrum::VectorSystem;

pub const MIN_N: usize = 2;
pub const MAX_N: usize = 8;
/// Normalized values below `1 - ANOMALY_MARGIN` are flagged.
pub const ANOMALY_MARGIN: f64 = 1e-4;
const INITIAL_SCALE: f64 = 0.3;
const FINAL_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorerConfig {
    /// Inner-oracle starts while searching.
    pub search_starts: usize,
    /// Inner-oracle starts when re-verifying candidates.
    pub verify_starts: usize,
    pub threads: usize,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            search_starts: 8,
            verify_starts: 128,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorerReport {
    pub n: usize,
    pub best_system: VectorSystem,
    /// Verified `v(best_system)`.
    pub normalized_value: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Best cheap score after each evaluation.
    pub history: Vec<f64>,
    /// Accepted moves of the search.
    pub accepted: usize,
    /// `normalized_value < 1 - ANOMALY_MARGIN`: a candidate counterexample.
    pub anomaly: bool,
}

/// `v(X) = n^{n/2} sup |prod <x_j, y>|` with the supremum estimated by
/// [`sup_product`].
pub fn normalized_value(x: &VectorSystem, effort: &OracleConfig) -> Result<f64> {
    let r = sup_product(x, effort)?;
    Ok(normalize(x.n(), r.log_value.log()))
}

fn normalize(n: usize, log_sup: f64) -> f64 {
    let nf = n as f64;
    (log_sup + 0.5 * nf * nf.ln()).exp()
}

/// Moves every vector along a random tangent direction of length about
/// `scale`, then renormalizes.
fn perturb(x: &VectorSystem, scale: f64, rng: &mut SeededRng) -> VectorSystem {
    let n = x.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let v = x.vector(j);
        let g = sampling::gaussian_vector(rng, n) / (n as f64).sqrt();
        let tangent = &g - &v * g.dot(&v);
        let moved = &v + tangent * scale;
        m.set_row(j, &(&moved / moved.norm()).transpose());
    }
    VectorSystem::from_matrix(m).expect("renormalized rows are unit vectors")
}

struct Scored {
    system: VectorSystem,
    value: f64,
    best_y: DVector<f64>,
}

fn score(x: VectorSystem, cfg: &OracleConfig, warm: Option<&DVector<f64>>) -> Result<Scored> {
    let extra: Vec<DVector<f64>> = warm.into_iter().cloned().collect();
    let r = sup_product_with_starts(&x, cfg, &extra)?;
    Ok(Scored {
        value: normalize(x.n(), r.log_value.log()),
        best_y: DVector::from_vec(r.best_y),
        system: x,
    })
}

fn annealed_scale(step: usize, steps: usize) -> f64 {
    if steps <= 1 {
        return INITIAL_SCALE;
    }
    let t = step as f64 / (steps - 1) as f64;
    INITIAL_SCALE * (FINAL_SCALE / INITIAL_SCALE).powf(t)
}

pub fn explore(n: usize, budget: usize, seed: u64) -> Result<ExplorerReport> {
    explore_with(n, budget, seed, &ExplorerConfig::default())
}

/// Greedy perturbation search. Evaluation 0 is the orthonormal baseline,
/// evaluation 1 a random system, and every later evaluation a perturbation
/// of the current system that replaces it when it scores lower.
pub fn explore_with(n: usize, budget: usize, seed: u64, settings: &ExplorerConfig) -> Result<ExplorerReport> {
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(Error::InvalidConfig(format!(
            "explorer supports {MIN_N} <= n <= {MAX_N}, got {n}"
        )));
    }
    if budget < 1 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }
    if settings.search_starts < 1 || settings.verify_starts < 1 {
        return Err(Error::InvalidConfig("oracle starts must be at least 1".into()));
    }
    let search_cfg = |eval: usize| OracleConfig {
        starts: settings.search_starts,
        seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(eval as u64),
        threads: settings.threads,
        ..Default::default()
    };
    let mut rng = sampling::rng(seed);
    let mut history = Vec::with_capacity(budget);

    let baseline = score(VectorSystem::orthonormal(n), &search_cfg(0), None)?;
    let mut best_system = baseline.system.clone();
    let mut best_value = baseline.value;
    history.push(best_value);

    let mut accepted = 0;
    let mut last_current = None;
    if budget > 1 {
        let mut current = score(VectorSystem::random(&mut rng, n), &search_cfg(1), None)?;
        let mut note = |s: &Scored, history: &mut Vec<f64>| {
            if s.value < best_value {
                best_value = s.value;
                best_system = s.system.clone();
            }
            history.push(best_value);
        };
        note(&current, &mut history);
        let steps = budget - 2;
        for step in 0..steps {
            let scale = annealed_scale(step, steps);
            let cand = perturb(&current.system, scale, &mut rng);
            let cand = score(cand, &search_cfg(step + 2), Some(&current.best_y))?;
            note(&cand, &mut history);
            if cand.value < current.value {
                current = cand;
                accepted += 1;
            }
        }
        last_current = Some(current.system);
    }

    // Re-verify with a larger inner effort; keep the smallest verified value.
    let verify_cfg = OracleConfig {
        starts: settings.verify_starts,
        seed: seed ^ 0xA5A5_A5A5_5A5A_5A5A,
        threads: settings.threads,
        ..Default::default()
    };
    let mut candidates = vec![VectorSystem::orthonormal(n), best_system];
    candidates.extend(last_current);
    let mut verified: Option<(VectorSystem, f64)> = None;
    for c in candidates {
        let v = normalized_value(&c, &verify_cfg)?;
        if verified.as_ref().is_none_or(|(_, best)| v < *best) {
            verified = Some((c, v));
        }
    }
    let (best_system, normalized_value) = verified.expect("baseline is always a candidate");

    Ok(ExplorerReport {
        n,
        best_system,
        normalized_value,
        iterations: budget,
        seed,
        history,
        accepted,
        anomaly: normalized_value < 1.0 - ANOMALY_MARGIN,
    })
}
