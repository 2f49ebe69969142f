//! Exit criteria. Runs every criterion, prints one PASS/FAIL line each, and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;

use polarization::explorer::explore;
use polarization::geometry::{slice_volume_formula, Ellipsoid};
use polarization::oracle::{grid_oracle_2d, sup_product, OracleConfig};
use polarization::sampling;
use polarization::spectrum::{bounds_report, geometric_bound, gram_spectrum, VectorSystem};
use polarization::witness::find_witness;

type Outcome = Result<String, String>;

fn random_systems(count: usize, n_min: usize, n_max: usize, seed: u64) -> Vec<VectorSystem> {
    let mut rng = sampling::rng(seed);
    let span = n_max - n_min + 1;
    (0..count)
        .map(|i| VectorSystem::random(&mut rng, n_min + i % span))
        .collect()
}

/// Replaces the last vector by a small tilt of the first one, rescaling the
/// tilt until the smallest Gram eigenvalue is close to 1e-6 (it scales like
/// the tilt squared).
fn near_degenerate(count: usize, seed: u64) -> Vec<VectorSystem> {
    let mut rng = sampling::rng(seed);
    (0..count)
        .map(|i| {
            let n = 2 + i % 15;
            let x = VectorSystem::random(&mut rng, n);
            let first = x.vector(0);
            let g = sampling::gaussian_vector(&mut rng, n);
            let tangent = &g - &first * g.dot(&first);
            let direction = &tangent / tangent.norm();
            let build = |tilt: f64| {
                let tilted = &first + &direction * tilt;
                let mut m = x.matrix().clone();
                m.set_row(n - 1, &(&tilted / tilted.norm()).transpose());
                VectorSystem::from_matrix(m).unwrap()
            };
            let mut tilt = 1e-3;
            let mut system = build(tilt);
            for _ in 0..4 {
                let smallest = gram_spectrum(&system).smallest().max(1e-14);
                tilt *= (1e-6 / smallest).sqrt();
                system = build(tilt);
            }
            system
        })
        .collect()
}

fn half_n_log_n(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * n.ln()
}

fn within_time(started: Instant, limit: Duration) -> Result<f64, String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(took.as_secs_f64())
    }
}

fn c1_certificate() -> Outcome {
    let started = Instant::now();
    let systems = random_systems(500, 2, 40, 1001);
    let mut worst = f64::INFINITY;
    for (i, x) in systems.iter().enumerate() {
        let w = find_witness(x).map_err(|e| format!("instance {i} (n={}): {e}", x.n()))?;
        worst = worst.min(w.slack);
        if w.slack < -1e-8 {
            return Err(format!("instance {i} (n={}): slack {}", x.n(), w.slack));
        }
    }
    let secs = within_time(started, Duration::from_secs(60))?;
    Ok(format!("500 systems, n in 2..=40, min slack {worst:.3e}, {secs:.1}s"))
}

fn c2_bound_chain() -> Outcome {
    let mut systems = random_systems(500, 2, 40, 1001);
    let degenerate = near_degenerate(100, 2002);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in &degenerate {
        let l = gram_spectrum(x).smallest();
        lo = lo.min(l);
        hi = hi.max(l);
    }
    systems.extend(degenerate);
    for (i, x) in systems.iter().enumerate() {
        let r = bounds_report(x);
        let c = r.chain();
        for w in c.windows(2) {
            if !(w[0].log() <= w[1].log() + 1e-12) {
                return Err(format!("instance {i}: chain {c:?}"));
            }
        }
    }
    Ok(format!(
        "600 systems (100 near-degenerate, lambda_1 in [{lo:.1e}, {hi:.1e}])"
    ))
}

fn c3_orthonormal() -> Outcome {
    for n in 2..=12 {
        let x = VectorSystem::orthonormal(n);
        let target = -half_n_log_n(n);
        let w = find_witness(&x).map_err(|e| format!("n={n}: {e}"))?;
        let rel = (w.log_product.log() - target).exp_m1().abs();
        if rel > 1e-8 {
            return Err(format!("n={n}: witness relative error {rel:e}"));
        }
        let o = sup_product(&x, &OracleConfig::default()).map_err(|e| e.to_string())?;
        let rel = (o.log_value.log() - target).exp_m1().abs();
        if rel > 1e-6 {
            return Err(format!("n={n}: oracle relative error {rel:e}"));
        }
    }
    Ok("n = 2..=12: witness and oracle equal n^{-n/2}".into())
}

fn c4_slice_formula() -> Outcome {
    let mut rng = sampling::rng(4004);
    let (mut worst, mut zeros) = (0.0f64, 0);
    for i in 0..200 {
        let k = 2 + i % 7;
        let a = sampling::conditioned_matrix(&mut rng, k, 10.0);
        let c = sampling::gaussian_vector(&mut rng, k);
        let e = Ellipsoid::from_linear_image(&a, c).map_err(|e| e.to_string())?;
        let ck = e.center()[k - 1];
        let v = e.volume_factor();
        let s = e.slice(ck).ok_or("empty central slice")?.volume_factor();
        let mut fraction: f64 = rng.random_range(-1.3..1.3);
        while (fraction.abs() - 1.0).abs() < 1e-6 {
            fraction = rng.random_range(-1.3..1.3);
        }
        let h = fraction * v / s;
        let formula = slice_volume_formula(v, s, h, k);
        match e.slice(ck + h) {
            Some(sl) => {
                let rel = (sl.volume_factor() / formula - 1.0).abs();
                if !(rel <= 1e-8) {
                    return Err(format!("ellipsoid {i} (k={k}): relative error {rel:e}"));
                }
                worst = worst.max(rel);
            }
            None => {
                if formula != 0.0 {
                    return Err(format!("ellipsoid {i}: empty slice but formula {formula}"));
                }
                zeros += 1;
            }
        }
    }
    Ok(format!("200 ellipsoids, max relative error {worst:.2e}, {zeros} empty slices match zero"))
}

fn c5_two_dimensional() -> Outcome {
    let mut rng = sampling::rng(5005);
    for i in 0..100 {
        let theta: f64 = rng.random_range(0.0..PI);
        let x = VectorSystem::from_angle(theta);
        let want = (1.0 + theta.cos().abs()) / 2.0;
        let grad = sup_product(&x, &OracleConfig::with_starts(32, i)).map_err(|e| e.to_string())?;
        let grid = grid_oracle_2d(&x, 10_000).map_err(|e| e.to_string())?;
        let (g, b) = (grad.log_value.log().exp(), grid.log_value.log().exp());
        if (g - want).abs() > 1e-6 || (b - want).abs() > 1e-6 {
            return Err(format!("theta={theta}: gradient {g}, grid {b}, closed form {want}"));
        }
        let geo = geometric_bound(&gram_spectrum(&x)).log().exp();
        if (geo - theta.sin().abs() / 2.0).abs() > 1e-9 {
            return Err(format!("theta={theta}: geometric bound {geo}"));
        }
    }
    Ok("100 angles: both oracles match (1+|cos|)/2, bound matches |sin|/2".into())
}

fn c6_conjecture_probe() -> Outcome {
    let started = Instant::now();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..20 {
        let r = explore(2, 2000, seed).map_err(|e| e.to_string())?;
        if r.anomaly {
            return Err(format!("seed {seed}: anomaly flagged at {}", r.normalized_value));
        }
        let v = r.normalized_value;
        if !(1.0 - 1e-4..=1.0 + 1e-6).contains(&v) {
            return Err(format!("seed {seed}: normalized value {v}"));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let secs = within_time(started, Duration::from_secs(120))?;
    Ok(format!("20 seeds, normalized value in [{lo:.9}, {hi:.9}], {secs:.1}s"))
}

fn c7_sandwich() -> Outcome {
    let systems = random_systems(200, 2, 10, 7007);
    let mut min_gap = f64::INFINITY;
    for (i, x) in systems.iter().enumerate() {
        let bound = geometric_bound(&gram_spectrum(x)).log();
        let w = find_witness(x).map_err(|e| format!("instance {i}: {e}"))?;
        let o = sup_product(x, &OracleConfig::with_starts(32, i as u64)).map_err(|e| e.to_string())?;
        let (wl, ol) = (w.log_product.log(), o.log_value.log());
        if !(bound <= wl + 1e-6 && wl <= ol + 1e-6) {
            return Err(format!("instance {i} (n={}): bound {bound}, witness {wl}, oracle {ol}", x.n()));
        }
        min_gap = min_gap.min(ol - wl);
    }
    Ok(format!("200 systems, n in 2..=10, min oracle-witness gap {min_gap:.2e}"))
}

fn strip_timing(text: &str) -> &str {
    text.find("\"timing\"").map_or(text, |i| &text[..i])
}

fn run_cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_polarization"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run CLI: {e}"))?;
    let code = out.status.code().unwrap_or(-1);
    Ok((code, String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn c8_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("polarization-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let random = dir.join("random.json");
    let angle = dir.join("angle.json");
    let (_, text) = run_cli(&["gen", "--n", "6", "--seed", "41", "--kind", "random"])?;
    std::fs::write(&random, text).map_err(|e| e.to_string())?;
    let (_, text) = run_cli(&["gen", "--n", "2", "--kind", "angle:1.0471975511965976"])?;
    std::fs::write(&angle, text).map_err(|e| e.to_string())?;
    let r = random.to_str().unwrap();
    let a = angle.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--n", "5", "--seed", "9", "--kind", "random"],
        vec!["gen", "--n", "2", "--kind", "angle:0.7"],
        vec!["bounds", r],
        vec!["witness", r, "--verify", "--trace", "--seed", "3"],
        vec!["oracle", r, "--starts", "16", "--seed", "5"],
        vec!["oracle", r, "--starts", "16", "--seed", "5", "--threads", "3"],
        vec!["oracle", a, "--method", "grid"],
        vec!["oracle", r, "--method", "monte-carlo", "--starts", "500", "--seed", "2"],
        vec!["explore", "--n", "3", "--budget", "60", "--seed", "11"],
        vec!["slice-demo", "--k", "5", "--seed", "8"],
    ];
    for args in &commands {
        let (c1, first) = run_cli(args)?;
        let (c2, second) = run_cli(args)?;
        if c1 != 0 || c2 != 0 {
            return Err(format!("{args:?}: exit codes {c1}, {c2}"));
        }
        if strip_timing(&first) != strip_timing(&second) {
            return Err(format!("{args:?}: outputs differ"));
        }
    }
    // thread count must not change the result either
    let (_, one) = run_cli(&commands[4])?;
    let (_, three) = run_cli(&commands[5])?;
    if strip_timing(&one) != strip_timing(&three) {
        return Err("oracle output depends on --threads".into());
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} command lines byte-identical across runs", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 certified geometric-mean bound", c1_certificate),
        ("2 bound chain", c2_bound_chain),
        ("3 orthonormal tightness", c3_orthonormal),
        ("4 slice volume shape independence", c4_slice_formula),
        ("5 n=2 closed form", c5_two_dimensional),
        ("6 conjecture probe n=2", c6_conjecture_probe),
        ("7 bound <= witness <= oracle", c7_sandwich),
        ("8 CLI determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
