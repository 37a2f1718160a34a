//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bmm_core::bounds::{
    construct_near_optimal_pair, phase_sweep, sweep_grid, theorem1_bounds, theorem2_bounds,
};
use bmm_core::chernoff::{bernoulli_ci, symmetric_ci};
use bmm_core::matrix::{mixture_distribution, BinaryMatrix, FlipProfile};
use bmm_core::oracle::{
    closest_pair, enumerate_matrices, min_ci_against, multiset_count, random_pair_stream,
};
use bmm_core::reductions::{
    eliminate_column, full_reduction_with, has_parity_form, is_critical_column, is_critical_pair,
    merge_columns, regularity_degree, MatrixPair, MergeOrder, ReductionOptions,
};
use bmm_core::sim::{estimate_exponent, simulate_error_rates, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn constant(f: f64, l: usize) -> FlipProfile {
    FlipProfile::constant(f, l).unwrap()
}

/// Both matrices use the same two rows at Hamming distance one, with counts
/// `(n, n + 1)` and `(n + 1, n)`.
fn is_single_shift_shape(pair: &MatrixPair) -> bool {
    let ma = pair.a.multiplicities();
    let mb = pair.b.multiplicities();
    let n_rows = pair.n_rows();
    if n_rows == 1 {
        let (x, y) = (pair.a.rows()[0], pair.b.rows()[0]);
        return (x ^ y).count_ones() == 1;
    }
    if ma.len() != 2 || mb.len() != 2 || ma[0].0 != mb[0].0 || ma[1].0 != mb[1].0 {
        return false;
    }
    let n = n_rows / 2;
    let counts = |m: &[(u32, usize)]| (m[0].1, m[1].1);
    let (ca, cb) = (counts(&ma), counts(&mb));
    (ma[0].0 ^ ma[1].0).count_ones() == 1
        && ((ca == (n, n + 1) && cb == (n + 1, n)) || (ca == (n + 1, n) && cb == (n, n + 1)))
}

fn criterion1() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [3, 5] {
        for l in [1, 2, 3] {
            for f in [0.05, 0.1, 0.2] {
                let r = closest_pair(n, l, &constant(f, l)).map_err(|e| e.to_string())?;
                let tau = symmetric_ci((1.0 - 2.0 * f) / n as f64).unwrap();
                let diff = (r.min_ci - tau).abs();
                worst = worst.max(diff);
                if diff > 1e-9 {
                    return Err(format!("N={n} L={l} f={f}: min_ci {} vs {tau}", r.min_ci));
                }
                if !is_single_shift_shape(&r.pair) {
                    return Err(format!(
                        "N={n} L={l} f={f}: minimizer {} / {} is not single-shift shaped",
                        r.pair.a, r.pair.b
                    ));
                }
            }
        }
    }
    Ok(format!("18 cases, max |min_ci - tau1| = {worst:.2e}"))
}

fn criterion2() -> Outcome {
    let mut notes = Vec::new();
    for (n, l, f) in [(2, 2, 0.3), (2, 2, 0.4), (4, 3, 0.3), (12, 3, 0.3)] {
        let b = theorem1_bounds(n, l, f).map_err(|e| e.to_string())?;
        let target = symmetric_ci(b.decomposition.epsilon).unwrap();
        if !b.tight || (b.lower - target).abs() > 1e-15 {
            return Err(format!(
                "N={n} L={l} f={f}: bounds not tight at the epsilon value"
            ));
        }
        let e = construct_near_optimal_pair(n, l, f).map_err(|e| e.to_string())?;
        let built = e.pair.chernoff().map_err(|e| e.to_string())?;
        if (built - target).abs() > 1e-9 {
            return Err(format!(
                "N={n} L={l} f={f}: construction CI {built} vs {target}"
            ));
        }
        let count = multiset_count(n, l);
        if count > 1_000_000 {
            notes.push(format!("({n},{l}) oracle skipped, {count} matrices"));
            continue;
        }
        let r = closest_pair(n, l, &constant(f, l)).map_err(|e| e.to_string())?;
        if (r.min_ci - target).abs() > 1e-9 {
            return Err(format!(
                "N={n} L={l} f={f}: oracle {} vs {target}",
                r.min_ci
            ));
        }
        if (r.min_ci - built).abs() > 1e-9 {
            return Err(format!(
                "N={n} L={l} f={f}: construction does not attain the minimum"
            ));
        }
        notes.push(format!(
            "({n},{l},{f}) oracle over {} pairs",
            r.candidates_examined
        ));
    }
    Ok(notes.join("; "))
}

fn criterion3() -> Outcome {
    let mut cases = 0;
    for n in 1..=6 {
        for l in 1..=3 {
            for f in [0.05, 0.1, 0.2, 0.3, 0.4] {
                let b = theorem1_bounds(n, l, f).map_err(|e| e.to_string())?;
                let r = closest_pair(n, l, &constant(f, l)).map_err(|e| e.to_string())?;
                if r.min_ci < b.lower - 1e-9 || r.min_ci > b.upper + 1e-9 {
                    return Err(format!(
                        "N={n} L={l} f={f}: min_ci {} outside [{}, {}]",
                        r.min_ci, b.lower, b.upper
                    ));
                }
                if b.tight && (r.min_ci - b.lower).abs() > 1e-9 {
                    return Err(format!(
                        "N={n} L={l} f={f}: tight case off by {}",
                        r.min_ci - b.lower
                    ));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (N, L, f) cases"))
}

fn criterion4() -> Outcome {
    let p = FlipProfile::new(vec![0.3, 0.1]).unwrap();
    let r = closest_pair(3, 2, &p).map_err(|e| e.to_string())?;
    let target = symmetric_ci(0.4 / 3.0).unwrap();
    let b = theorem2_bounds(3, 2, &p).map_err(|e| e.to_string())?;
    if (r.min_ci - target).abs() > 1e-9 || (b.lower - target).abs() > 1e-15 || !b.tight {
        return Err(format!(
            "min_ci {} bound {} target {target}",
            r.min_ci, b.lower
        ));
    }
    Ok(format!("min_ci = {:.12}", r.min_ci))
}

fn criterion5() -> Outcome {
    let grid = sweep_grid(0.0, 0.5, 500).unwrap();
    for n in 2..=8 {
        for l in 2..=4 {
            let rows = phase_sweep(n, l, &grid).map_err(|e| e.to_string())?;
            for r in &rows {
                let d = r.bound_low_noise - r.bound_high_noise;
                let ok = if r.f < 0.25 {
                    d < 0.0
                } else if r.f == 0.25 {
                    d.abs() <= 1e-15
                } else if r.f < 0.5 {
                    d > 0.0
                } else {
                    r.bound_low_noise == 0.0 && r.bound_high_noise == 0.0
                };
                if !ok {
                    return Err(format!("N={n} L={l} f={}: low - high = {d}", r.f));
                }
            }
        }
    }
    Ok("21 (N, L) sweeps of 501 points".into())
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = 1e-9;

    // elimination
    let mut checked = 0;
    let mut seed = 0;
    while checked < 1000 {
        seed += 1;
        let n = rng.random_range(1..=6);
        let l = rng.random_range(2..=4);
        let f = rng.random_range(0.0..0.5);
        let pair = random_pair_stream(n, l, 1, seed, false, &constant(f, l))
            .unwrap()
            .remove(0);
        if pair.is_equal() {
            continue;
        }
        let free: Vec<usize> = (0..l)
            .filter(|&c| !is_critical_column(&pair, c).unwrap())
            .collect();
        if free.is_empty() {
            continue;
        }
        let before = pair.chernoff().unwrap();
        for col in free {
            let after = eliminate_column(&pair, col).unwrap().chernoff().unwrap();
            if after > before + tol {
                return Err(format!(
                    "elimination raised CI: {} / {} col {col}",
                    pair.a, pair.b
                ));
            }
        }
        checked += 1;
    }

    // merging critical pairs
    let mut merged = 0;
    for (n, l) in [(2, 2), (3, 2), (5, 2), (4, 3), (6, 3), (8, 4)] {
        let profile =
            FlipProfile::new((0..l).map(|_| rng.random_range(0.0..0.5)).collect()).unwrap();
        for pair in random_pair_stream(n, l, 170, n as u64 * 31 + l as u64, true, &profile).unwrap()
        {
            let before = pair.chernoff().unwrap();
            let reg = regularity_degree(&pair);
            let (i, j) = (rng.random_range(0..l - 1), l - 1);
            let m = merge_columns(&pair, i, j).unwrap();
            if m.chernoff().unwrap() > before + tol {
                return Err(format!("merge raised CI: {} / {}", pair.a, pair.b));
            }
            if !is_critical_pair(&m).unwrap() {
                return Err(format!("merge lost criticality: {} / {}", pair.a, pair.b));
            }
            if regularity_degree(&m) < reg + 1 {
                return Err(format!("regularity did not grow: {} / {}", pair.a, pair.b));
            }
            let opts = |merge_order| ReductionOptions {
                merge_order,
                record_ci: false,
            };
            let lr = full_reduction_with(&pair, opts(MergeOrder::LeftToRight)).unwrap();
            let rl = full_reduction_with(&pair, opts(MergeOrder::RightToLeft)).unwrap();
            let same = (lr.f_br - rl.f_br).abs() <= 1e-12
                && (lr.p_br_a - rl.p_br_a).abs() <= 1e-12
                && (lr.p_br_b - rl.p_br_b).abs() <= 1e-12;
            if !same {
                return Err(format!(
                    "merge order changed the reduction of {} / {}",
                    pair.a, pair.b
                ));
            }
            merged += 1;
        }
    }

    // gap after full reduction
    let mut gaps = 0;
    seed = 10_000;
    while gaps < 1000 {
        seed += 1;
        let n = rng.random_range(1..=6);
        let l = rng.random_range(1..=4);
        let f = rng.random_range(0.0..0.5);
        let pair = random_pair_stream(n, l, 1, seed, false, &constant(f, l))
            .unwrap()
            .remove(0);
        if pair.is_equal() {
            continue;
        }
        let t = full_reduction_with(&pair, ReductionOptions::default()).unwrap();
        let bound = (2.0 * (1.0 - 2.0 * f)).powi((l - t.alpha) as i32) / (2.0 * n as f64);
        if t.gap() < bound - 1e-12 {
            return Err(format!(
                "gap {} below {bound} for {} / {}",
                t.gap(),
                pair.a,
                pair.b
            ));
        }
        gaps += 1;
    }
    Ok(format!(
        "{checked} eliminations, {merged} critical merges, {gaps} gaps"
    ))
}

fn criterion7() -> Outcome {
    for eps in [0.1_f64, 0.3, 0.5] {
        let steps = ((1.0 - eps) / 1e-3).round() as usize;
        let (mut arg, mut min) = (0.0, f64::INFINITY);
        for k in 0..=steps {
            let p = k as f64 * 1e-3;
            let v = bernoulli_ci(p, (p + eps).min(1.0)).unwrap();
            if v < min {
                min = v;
                arg = p;
            }
        }
        let sym = symmetric_ci(eps).unwrap();
        if (arg - (1.0 - eps) / 2.0).abs() > 1e-3 + 1e-12 || (min - sym).abs() > 1e-9 {
            return Err(format!("eps={eps}: argmin {arg} value {min} vs {sym}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let eps: f64 = rng.random_range(0.0..1.0);
        let p: f64 = rng.random_range(0.0..=1.0 - eps);
        let q = rng.random_range(p + eps..=1.0);
        let (p, q) = if rng.random::<bool>() { (p, q) } else { (q, p) };
        if bernoulli_ci(p, q).unwrap() < symmetric_ci(eps).unwrap() - 1e-12 {
            return Err(format!("({p}, {q}) beats symmetric_ci({eps})"));
        }
    }
    Ok("grid minima and 10^4 random pairs".into())
}

fn criterion8() -> Outcome {
    let mut pairs = 0u64;
    let mut critical = 0u64;
    for n in 1..=4 {
        for l in 1..=3 {
            let all: Vec<BinaryMatrix> = enumerate_matrices(n, l).unwrap().collect();
            let profile = constant(0.1, l);
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    let pair =
                        MatrixPair::new(all[i].clone(), all[j].clone(), profile.clone()).unwrap();
                    let c = is_critical_pair(&pair).unwrap();
                    if c != has_parity_form(&pair).unwrap() {
                        return Err(format!("disagreement on {} / {}", pair.a, pair.b));
                    }
                    pairs += 1;
                    critical += c as u64;
                }
            }
        }
    }
    Ok(format!("{pairs} pairs, {critical} critical"))
}

fn criterion9() -> Outcome {
    let truth = BinaryMatrix::canonicalize(vec![0, 1, 1], 1).unwrap();
    let profile = constant(0.1, 1);
    let exact = min_ci_against(&truth, &profile)
        .map_err(|e| e.to_string())?
        .value;
    let cfg = SimConfig::new(
        truth,
        profile,
        (1..=6).map(|k| 100 * k).collect(),
        20_000,
        20_240_601,
    )
    .map_err(|e| e.to_string())?;
    let est = estimate_exponent(&cfg).map_err(|e| format!("D_X* = {exact:.6}; {e}"))?;
    let rel = (est.slope - exact) / exact;
    let msg = format!(
        "slope {:.6} vs D_X* {exact:.6} ({:+.1}%)",
        est.slope,
        100.0 * rel
    );
    if rel.abs() <= 0.3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let l = rng.random_range(1..=8);
        let n = rng.random_range(1..=12);
        let rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..1u32 << l)).collect();
        let m = BinaryMatrix::canonicalize(rows, l).unwrap();
        let p = FlipProfile::new((0..l).map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap();
        let d = mixture_distribution(&m, &p).unwrap();
        worst = worst.max((d.probs().iter().sum::<f64>() - 1.0).abs());
    }
    if worst > 1e-12 {
        return Err(format!("mass deviation {worst:.2e}"));
    }
    let cfg = SimConfig::new(
        BinaryMatrix::canonicalize(vec![0, 1, 3], 2).unwrap(),
        FlipProfile::new(vec![0.2, 0.1]).unwrap(),
        vec![5, 20, 60],
        3000,
        42,
    )
    .unwrap();
    let a = format!(
        "{:?}",
        simulate_error_rates(&cfg).map_err(|e| e.to_string())?
    );
    let b = format!(
        "{:?}",
        simulate_error_rates(&cfg).map_err(|e| e.to_string())?
    );
    if a != b {
        return Err("simulation reports differ between identical seeds".into());
    }
    Ok(format!(
        "2000 mixtures, max mass deviation {worst:.1e}; repeat simulation identical"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "tight low-noise case",
            criterion1,
            Some(Duration::from_secs(60)),
        ),
        ("tight high-noise case", criterion2, None),
        ("sandwich property", criterion3, None),
        ("generalized tight case", criterion4, None),
        ("phase transition at f = 1/4", criterion5, None),
        ("reduction properties", criterion6, None),
        ("Bernoulli family minimum", criterion7, None),
        ("criticality characterization", criterion8, None),
        (
            "Monte Carlo exponent",
            criterion9,
            Some(Duration::from_secs(300)),
        ),
        ("normalization and determinism", criterion10, None),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if let (Ok(msg), Some(limit)) = (&outcome, limit) {
            if took > *limit {
                outcome = Err(format!("{msg}; took {took:.1?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{took:.2?}]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{took:.2?}]", k + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
