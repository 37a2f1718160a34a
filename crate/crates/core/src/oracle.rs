//! Exhaustive closest-pair search over all canonical `N × L` source matrices.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chernoff::chernoff_info_probs;
use crate::error::{invalid, Error, Result};
use crate::matrix::{check_cols, mixture_distribution, BinaryMatrix, FlipProfile};
use crate::reductions::MatrixPair;

/// Default limit on the number of enumerated matrices.
pub const DEFAULT_CAP: u128 = 1_000_000;

/// Pairs whose Chernoff information lies within this of the minimum are ties.
pub const TIE_TOL: f64 = 1e-12;

/// `C(2^L + N - 1, N)`, saturating at `u128::MAX`.
pub fn multiset_count(n_rows: usize, n_cols: usize) -> u128 {
    if n_cols >= 127 {
        return u128::MAX;
    }
    let universe = 1u128 << n_cols;
    let n = n_rows as u128;
    // C(universe + n - 1, n) with k = min(n, universe - 1)
    let top = universe + n - 1;
    let k = n.min(universe - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (top - i) / (i + 1) stays integral at each step
        match acc.checked_mul(top - i) {
            Some(v) => acc = v / (i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

fn check_cap(n_rows: usize, n_cols: usize, cap: u128) -> Result<u128> {
    let count = multiset_count(n_rows, n_cols);
    if count > cap {
        return Err(Error::ResourceCap { count, cap });
    }
    Ok(count)
}

/// Lexicographic generator of non-decreasing row sequences.
#[derive(Debug, Clone)]
pub struct MatrixIter {
    current: Option<Vec<u32>>,
    max_word: u32,
    n_cols: usize,
}

impl Iterator for MatrixIter {
    type Item = BinaryMatrix;

    fn next(&mut self) -> Option<BinaryMatrix> {
        let rows = self.current.as_mut()?;
        let out = BinaryMatrix::from_sorted(rows.clone(), self.n_cols);
        match rows.iter().rposition(|&w| w < self.max_word) {
            Some(pos) => {
                let v = rows[pos] + 1;
                rows[pos..].iter_mut().for_each(|w| *w = v);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Every multiset of `N` rows of width `L`, once each, in lexicographic
/// order of the sorted rows.
pub fn enumerate_matrices(n_rows: usize, n_cols: usize) -> Result<MatrixIter> {
    enumerate_matrices_capped(n_rows, n_cols, DEFAULT_CAP)
}

pub fn enumerate_matrices_capped(n_rows: usize, n_cols: usize, cap: u128) -> Result<MatrixIter> {
    check_cols(n_cols)?;
    if n_rows == 0 {
        return invalid("N must be at least 1");
    }
    check_cap(n_rows, n_cols, cap)?;
    Ok(MatrixIter {
        current: Some(vec![0; n_rows]),
        max_word: ((1u64 << n_cols) - 1) as u32,
        n_cols,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosestPairResult {
    pub pair: MatrixPair,
    pub min_ci: f64,
    /// Unordered pairs of distinct matrices.
    pub candidates_examined: u64,
    /// Two distinct matrices share one output distribution.
    pub non_identifiable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub cap: u128,
    /// Skip pairs whose Bhattacharyya distance already exceeds the running
    /// minimum. Never changes the result.
    pub prune: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            prune: true,
        }
    }
}

/// `-log Σ √p √q` from precomputed square roots.
fn bhattacharyya(sp: &[f64], sq: &[f64]) -> f64 {
    let bc: f64 = sp.iter().zip(sq).map(|(a, b)| a * b).sum();
    if bc > 0.0 {
        -bc.ln()
    } else {
        f64::INFINITY
    }
}

struct Family {
    matrices: Vec<BinaryMatrix>,
    dists: Vec<Vec<f64>>,
    roots: Vec<Vec<f64>>,
}

fn family(n_rows: usize, n_cols: usize, profile: &FlipProfile, cap: u128) -> Result<Family> {
    if profile.len() != n_cols {
        return invalid(format!(
            "profile has {} entries for L = {n_cols}",
            profile.len()
        ));
    }
    let matrices: Vec<BinaryMatrix> = enumerate_matrices_capped(n_rows, n_cols, cap)?.collect();
    let dists = matrices
        .par_iter()
        .map(|m| mixture_distribution(m, profile).map(|d| d.probs().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let roots = dists
        .iter()
        .map(|d| d.iter().map(|p| p.sqrt()).collect())
        .collect();
    Ok(Family {
        matrices,
        dists,
        roots,
    })
}

/// Exact minimum Chernoff information over all unordered pairs of distinct
/// canonical matrices, with the default cap.
pub fn closest_pair(
    n_rows: usize,
    n_cols: usize,
    profile: &FlipProfile,
) -> Result<ClosestPairResult> {
    closest_pair_with(n_rows, n_cols, profile, OracleOptions::default())
}

pub fn closest_pair_with(
    n_rows: usize,
    n_cols: usize,
    profile: &FlipProfile,
    opts: OracleOptions,
) -> Result<ClosestPairResult> {
    let fam = family(n_rows, n_cols, profile, opts.cap)?;
    let n = fam.matrices.len();
    if n < 2 {
        return invalid(format!(
            "only {n} matrix of shape {n_rows}x{n_cols}; no pairs"
        ));
    }
    let best = AtomicU64::new(f64::INFINITY.to_bits());
    // each task keeps every pair within TIE_TOL of the running minimum, so
    // the final tie-break sees all pairs within TIE_TOL of the true minimum
    let per_row: Vec<Vec<(f64, usize, usize)>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut kept = Vec::new();
            let p = &fam.dists[i];
            let sp = &fam.roots[i];
            for j in i + 1..n {
                let current = f64::from_bits(best.load(Ordering::Relaxed));
                if opts.prune && bhattacharyya(sp, &fam.roots[j]) > current + TIE_TOL {
                    continue;
                }
                let q = &fam.dists[j];
                let v = chernoff_info_probs(p, q)
                    .map(|r| r.value)
                    .unwrap_or(f64::INFINITY);
                if v <= current + TIE_TOL {
                    kept.push((v, i, j));
                    // non-negative floats order like their bit patterns
                    best.fetch_min(v.to_bits(), Ordering::Relaxed);
                }
            }
            kept
        })
        .collect();
    let all: Vec<(f64, usize, usize)> = per_row.into_iter().flatten().collect();
    let min_ci = all.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let &(_, i, j) = all
        .iter()
        .filter(|t| t.0 <= min_ci + TIE_TOL)
        .min_by_key(|t| (t.1, t.2))
        .expect("at least one pair evaluated");
    let min_ci = all
        .iter()
        .find(|t| t.1 == i && t.2 == j)
        .map(|t| t.0)
        .unwrap_or(min_ci);
    let pair = MatrixPair::new(
        fam.matrices[i].clone(),
        fam.matrices[j].clone(),
        profile.clone(),
    )?;
    Ok(ClosestPairResult {
        pair,
        min_ci,
        candidates_examined: (n as u64) * (n as u64 - 1) / 2,
        non_identifiable: min_ci == 0.0,
    })
}

/// `D_{X*} = min_{X ≠ X*} C(P_X, P_{X*})`, the exact error exponent of
/// maximum-likelihood identification of `truth`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthExponent {
    pub value: f64,
    pub closest: BinaryMatrix,
}

pub fn min_ci_against(truth: &BinaryMatrix, profile: &FlipProfile) -> Result<TruthExponent> {
    min_ci_against_capped(truth, profile, DEFAULT_CAP)
}

pub fn min_ci_against_capped(
    truth: &BinaryMatrix,
    profile: &FlipProfile,
    cap: u128,
) -> Result<TruthExponent> {
    let fam = family(truth.n_rows(), truth.n_cols(), profile, cap)?;
    let t = mixture_distribution(truth, profile)?;
    let scored = fam
        .matrices
        .par_iter()
        .zip(&fam.dists)
        .filter(|(m, _)| *m != truth)
        .map(|(m, d)| chernoff_info_probs(t.probs(), d).map(|r| (r.value, m)))
        .collect::<Result<Vec<_>>>()?;
    // stable order, so the first minimum is the lexicographically smallest
    let mut best: Option<(f64, &BinaryMatrix)> = None;
    for (v, m) in scored {
        if best.is_none_or(|(b, _)| v < b - TIE_TOL) {
            best = Some((v, m));
        }
    }
    match best {
        Some((value, m)) => Ok(TruthExponent {
            value,
            closest: m.clone(),
        }),
        None => invalid("the candidate space has no alternative to the truth"),
    }
}

/// Seeded random pairs of `N × L` matrices.
///
/// Without `critical_only` both matrices have uniformly random rows. With it,
/// `A` holds `n*` copies of every even-weight word and `B` the same number of
/// every odd-weight word, both padded with the same random rows. This needs
/// `2^{L-1} <= N`.
pub fn random_pair_stream(
    n_rows: usize,
    n_cols: usize,
    count: usize,
    seed: u64,
    critical_only: bool,
    profile: &FlipProfile,
) -> Result<Vec<MatrixPair>> {
    check_cols(n_cols)?;
    if n_rows == 0 {
        return invalid("N must be at least 1");
    }
    if profile.len() != n_cols {
        return invalid(format!(
            "profile has {} entries for L = {n_cols}",
            profile.len()
        ));
    }
    let half = 1usize << (n_cols - 1);
    if critical_only && half > n_rows {
        return invalid(format!(
            "no critical pair of {n_rows} rows and {n_cols} columns: need 2^(L-1) = {half} <= N"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = 1u32 << n_cols;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (a, b) = if critical_only {
            let n_star = rng.random_range(1..=n_rows / half);
            let mut a = Vec::with_capacity(n_rows);
            let mut b = Vec::with_capacity(n_rows);
            for w in 0..upper {
                let target = if w.count_ones() % 2 == 0 {
                    &mut a
                } else {
                    &mut b
                };
                target.extend(std::iter::repeat_n(w, n_star));
            }
            let padding: Vec<u32> = (0..n_rows - n_star * half)
                .map(|_| rng.random_range(0..upper))
                .collect();
            a.extend(&padding);
            b.extend(&padding);
            (a, b)
        } else {
            let a = (0..n_rows).map(|_| rng.random_range(0..upper)).collect();
            let b = (0..n_rows).map(|_| rng.random_range(0..upper)).collect();
            (a, b)
        };
        out.push(MatrixPair::new(
            BinaryMatrix::canonicalize(a, n_cols)?,
            BinaryMatrix::canonicalize(b, n_cols)?,
            profile.clone(),
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chernoff::symmetric_ci;
    use crate::reductions::is_critical_pair;

    fn c(f: f64, l: usize) -> FlipProfile {
        FlipProfile::constant(f, l).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(multiset_count(2, 1), 3);
        assert_eq!(multiset_count(3, 2), 20);
        assert_eq!(multiset_count(2, 2), 10);
        assert_eq!(multiset_count(6, 3), 1716);
        assert_eq!(multiset_count(1, 30), 1 << 30);
        assert_eq!(multiset_count(200, 30), u128::MAX);
    }

    #[test]
    fn enumeration_examples() {
        let all: Vec<_> = enumerate_matrices(2, 1)
            .unwrap()
            .map(|m| m.row_strings())
            .collect();
        assert_eq!(all, vec![vec!["0", "0"], vec!["0", "1"], vec!["1", "1"]]);
        assert_eq!(enumerate_matrices(3, 2).unwrap().count(), 20);
        assert_eq!(enumerate_matrices(2, 2).unwrap().count(), 10);
    }

    #[test]
    fn enumeration_is_sorted_and_complete() {
        for n in 1..=6 {
            for l in 1..=3 {
                let v: Vec<_> = enumerate_matrices(n, l).unwrap().collect();
                assert_eq!(v.len() as u128, multiset_count(n, l));
                assert!(v.windows(2).all(|w| w[0].rows() < w[1].rows()));
            }
        }
    }

    #[test]
    fn enumeration_cap() {
        match enumerate_matrices_capped(3, 2, 10) {
            Err(Error::ResourceCap { count, cap }) => assert_eq!((count, cap), (20, 10)),
            other => panic!("expected cap error, got {other:?}"),
        }
        assert!(enumerate_matrices(50, 10).is_err());
    }

    #[test]
    fn closest_pair_low_noise() {
        let r = closest_pair(3, 2, &c(0.1, 2)).unwrap();
        assert!((r.min_ci - symmetric_ci(0.8 / 3.0).unwrap()).abs() < 1e-9);
        assert_eq!(r.candidates_examined, 190);
        assert!(!r.non_identifiable);
        // one row differs in one column
        let d = r.pair.delta();
        assert_eq!(d.delta_a.n_rows(), 1);
        assert_eq!((d.delta_a.rows()[0] ^ d.delta_b.rows()[0]).count_ones(), 1);
    }

    #[test]
    fn closest_pair_high_noise() {
        let r = closest_pair(2, 2, &c(0.3, 2)).unwrap();
        assert!((r.min_ci - symmetric_ci(0.16).unwrap()).abs() < 1e-9);
        assert_eq!(r.candidates_examined, 45);
        assert_eq!(r.pair.a.row_strings(), vec!["00", "11"]);
        assert_eq!(r.pair.b.row_strings(), vec!["01", "10"]);
    }

    #[test]
    fn pruning_does_not_change_result() {
        for (n, l, f) in [(3, 2, 0.1), (4, 2, 0.3), (2, 3, 0.4), (3, 3, 0.2)] {
            let a = closest_pair(n, l, &c(f, l)).unwrap();
            let b = closest_pair_with(
                n,
                l,
                &c(f, l),
                OracleOptions {
                    prune: false,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn half_flip_collapses() {
        let r = closest_pair(2, 2, &c(0.5, 2)).unwrap();
        assert_eq!(r.min_ci, 0.0);
        assert!(r.non_identifiable);
        assert_eq!(r.pair.a.row_strings(), vec!["00", "00"]);
        assert_eq!(r.pair.b.row_strings(), vec!["00", "01"]);
    }

    #[test]
    fn truth_exponent() {
        let truth = BinaryMatrix::canonicalize(vec![0, 1, 1], 1).unwrap();
        let e = min_ci_against(&truth, &c(0.1, 1)).unwrap();
        assert!((e.value - symmetric_ci(0.8 / 3.0).unwrap()).abs() < 1e-9);
        assert_eq!(e.closest.rows(), &[0, 0, 1]);
    }

    #[test]
    fn stream_determinism_and_contract() {
        let p = c(0.2, 2);
        let a = random_pair_stream(4, 2, 50, 7, false, &p).unwrap();
        let b = random_pair_stream(4, 2, 50, 7, false, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_pair_stream(4, 2, 50, 8, false, &p).unwrap());
        assert!(random_pair_stream(4, 2, 0, 7, true, &p).unwrap().is_empty());
        for pair in random_pair_stream(2, 2, 100, 3, true, &p).unwrap() {
            assert!(is_critical_pair(&pair).unwrap());
        }
        for pair in random_pair_stream(7, 3, 100, 3, true, &c(0.3, 3)).unwrap() {
            assert!(is_critical_pair(&pair).unwrap());
        }
        assert!(random_pair_stream(3, 3, 1, 0, true, &c(0.3, 3)).is_err());
    }
}
