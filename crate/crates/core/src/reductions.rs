//! Column reductions on pairs of source matrices.
//!
//! Two reductions shrink a pair `(A, B)` by one column without increasing
//! the Chernoff information between their mixtures:
//!
//! * **elimination** drops a column whose removal leaves `A != B`
//!   (a *non-critical* column);
//! * **merging** replaces columns `i < j` by their XOR, with flip rate
//!   `f_i (1 - f_j) + (1 - f_i) f_j`. Under `g(f) = 1 - 2f` this is
//!   multiplicative: `g(f_new) = g(f_i) g(f_j)`.
//!
//! [`full_reduction`] eliminates until every column is critical, then merges
//! down to a single column. The resulting pair of Bernoulli parameters is at
//! least `2^{h-1} Π g(f_l) / N` apart, where the product runs over the `h`
//! surviving columns; for a constant profile that is `[2(1-2f)]^h / (2N)`.

use std::collections::HashMap;

use crate::chernoff::{chernoff_info, symmetric_ci};
use crate::error::{invalid, Error, Result};
use crate::matrix::{
    delete_bit, delta_reduce, mixture_distribution, BinaryMatrix, DeltaResult, FlipProfile,
};

/// Two equally shaped matrices observed through the same channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    pub a: BinaryMatrix,
    pub b: BinaryMatrix,
    pub profile: FlipProfile,
}

impl MatrixPair {
    pub fn new(a: BinaryMatrix, b: BinaryMatrix, profile: FlipProfile) -> Result<Self> {
        if a.n_cols() != b.n_cols() || a.n_rows() != b.n_rows() {
            return invalid(format!(
                "pair shapes differ: {}x{} vs {}x{}",
                a.n_rows(),
                a.n_cols(),
                b.n_rows(),
                b.n_cols()
            ));
        }
        if profile.len() != a.n_cols() {
            return invalid(format!(
                "flip profile has {} entries for {} columns",
                profile.len(),
                a.n_cols()
            ));
        }
        Ok(Self { a, b, profile })
    }

    pub fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.a.n_cols()
    }

    pub fn is_equal(&self) -> bool {
        self.a == self.b
    }

    pub fn delta(&self) -> DeltaResult {
        delta_reduce(&self.a, &self.b).expect("pair shapes are validated on construction")
    }

    /// Chernoff information between the two mixtures.
    pub fn chernoff(&self) -> Result<f64> {
        let pa = mixture_distribution(&self.a, &self.profile)?;
        let pb = mixture_distribution(&self.b, &self.profile)?;
        Ok(chernoff_info(&pa, &pb)?.value)
    }

    /// The same pair with both matrices' columns relabelled: new column
    /// `perm[c]` takes old column `c`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let l = self.n_cols();
        let mut seen = vec![false; l];
        if perm.len() != l
            || perm
                .iter()
                .any(|&p| p >= l || std::mem::replace(&mut seen[p], true))
        {
            return invalid("column permutation is not a permutation of 0..L");
        }
        let map = |m: &BinaryMatrix| {
            let rows: Vec<u32> = m.rows().iter().map(|&r| permute_word(r, perm)).collect();
            BinaryMatrix::canonicalize(rows, l)
        };
        let mut flips = vec![0.0; l];
        for (c, &p) in perm.iter().enumerate() {
            flips[p] = self.profile.get(c);
        }
        Self::new(map(&self.a)?, map(&self.b)?, FlipProfile::new(flips)?)
    }
}

pub(crate) fn permute_word(word: u32, perm: &[usize]) -> u32 {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (c, &p)| acc | (((word >> c) & 1) << p))
}

/// `g(f) = 1 - 2f`.
pub fn g_map(f: f64) -> f64 {
    1.0 - 2.0 * f
}

/// Flip rate of the XOR of two independently flipped bits.
pub fn merged_flip(fi: f64, fj: f64) -> f64 {
    fi * (1.0 - fj) + (1.0 - fi) * fj
}

fn check_col(pair: &MatrixPair, col: usize) -> Result<()> {
    if col >= pair.n_cols() {
        return invalid(format!(
            "column {col} out of range for L = {}",
            pair.n_cols()
        ));
    }
    Ok(())
}

/// True iff deleting column `col` from both matrices makes them equal.
pub fn is_critical_column(pair: &MatrixPair, col: usize) -> Result<bool> {
    check_col(pair, col)?;
    Ok(pair.a.without_column(col)? == pair.b.without_column(col)?)
}

/// True iff every column of the (unequal) pair is critical.
pub fn is_critical_pair(pair: &MatrixPair) -> Result<bool> {
    if pair.is_equal() {
        return invalid("criticality is defined for unequal pairs only");
    }
    for col in 0..pair.n_cols() {
        if !is_critical_column(pair, col)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Parity characterization of critical pairs: one delta holds exactly `n`
/// copies of every even-weight word and the other exactly `n` copies of every
/// odd-weight word, for some `n >= 1`.
///
/// Computed from the delta multisets alone, without deleting columns.
pub fn has_parity_form(pair: &MatrixPair) -> Result<bool> {
    if pair.is_equal() {
        return invalid("parity form is defined for unequal pairs only");
    }
    let d = pair.delta();
    let l = pair.n_cols();
    let ma = d.delta_a.multiplicities();
    let mb = d.delta_b.multiplicities();
    let Some(&(first_a, n)) = ma.first() else {
        return Ok(false);
    };
    let class_of = |w: u32| w.count_ones() % 2;
    let class_a = class_of(first_a);
    let half = 1usize << (l - 1);
    let uniform = |ms: &[(u32, usize)], class: u32| {
        ms.len() == half && ms.iter().all(|&(w, c)| c == n && class_of(w) == class)
    };
    Ok(uniform(&ma, class_a) && uniform(&mb, 1 - class_a))
}

/// Removes a non-critical column from both matrices and the profile.
pub fn eliminate_column(pair: &MatrixPair, col: usize) -> Result<MatrixPair> {
    if is_critical_column(pair, col)? {
        return Err(Error::ContractViolation(format!(
            "column {col} is critical; eliminating it would make the matrices equal"
        )));
    }
    MatrixPair::new(
        pair.a.without_column(col)?,
        pair.b.without_column(col)?,
        pair.profile.without(col),
    )
}

fn merge_word(word: u32, i: usize, j: usize) -> u32 {
    let x = ((word >> i) ^ (word >> j)) & 1;
    let w = delete_bit(word, j);
    (w & !(1 << i)) | (x << i)
}

/// Replaces columns `i < j` by their XOR, stored at position `i`; column `j`
/// is removed and higher columns shift down.
pub fn merge_columns(pair: &MatrixPair, i: usize, j: usize) -> Result<MatrixPair> {
    let l = pair.n_cols();
    if i >= j || j >= l {
        return invalid(format!(
            "merge needs i < j < L, got i = {i}, j = {j}, L = {l}"
        ));
    }
    let merge = |m: &BinaryMatrix| {
        let rows = m
            .rows()
            .iter()
            .map(|&r| merge_word(r, i, j))
            .collect::<Vec<_>>();
        BinaryMatrix::canonicalize(rows, l - 1)
    };
    let mut flips = pair.profile.flips().to_vec();
    flips[i] = merged_flip(flips[i], flips[j]);
    flips.remove(j);
    MatrixPair::new(
        merge(&pair.a)?,
        merge(&pair.b)?,
        FlipProfile::from_vec_unchecked(flips),
    )
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest `t` such that every distinct-row multiplicity in both deltas is a
/// multiple of `2^t`. Zero for equal pairs.
pub fn regularity_degree(pair: &MatrixPair) -> u32 {
    let d = pair.delta();
    let g = d
        .delta_a
        .multiplicities()
        .into_iter()
        .chain(d.delta_b.multiplicities())
        .fold(0, |acc, (_, c)| gcd(acc, c));
    if g == 0 {
        0
    } else {
        g.trailing_zeros()
    }
}

/// A partition of both deltas into `(i, j)`-match quadruples.
///
/// Each quadruple `(s1, r1, s2, r2)` indexes rows `s1, r1` of `delta_a` and
/// `s2, r2` of `delta_b`. Writing `e_c` for the unit word of column `c`:
/// `s2 = s1 ^ e_j`, `r2 = s1 ^ e_i` and `r1 = s1 ^ e_i ^ e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadruplePartition {
    pub i: usize,
    pub j: usize,
    pub delta_a: BinaryMatrix,
    pub delta_b: BinaryMatrix,
    pub quads: Vec<(usize, usize, usize, usize)>,
}

/// Matching `delta_a[s] -> delta_b[t]` with `delta_b[t] = delta_a[s] ^ e_col`;
/// the k-th copy of a value maps to the k-th copy of its partner.
fn column_matching(da: &BinaryMatrix, db: &BinaryMatrix, col: usize) -> Option<Vec<usize>> {
    let mut slots: HashMap<u32, Vec<usize>> = HashMap::new();
    for (t, &w) in db.rows().iter().enumerate() {
        slots.entry(w).or_default().push(t);
    }
    let mut taken: HashMap<u32, usize> = HashMap::new();
    let mut out = Vec::with_capacity(da.n_rows());
    for &w in da.rows() {
        let target = w ^ (1 << col);
        let k = taken.entry(target).or_insert(0);
        let t = *slots.get(&target)?.get(*k)?;
        *k += 1;
        out.push(t);
    }
    Some(out)
}

/// Partitions the deltas of a critical pair into `(i, j)`-match quadruples by
/// chasing the row matchings that delete column `i` and column `j`.
pub fn quadruple_partition(pair: &MatrixPair, i: usize, j: usize) -> Result<QuadruplePartition> {
    let l = pair.n_cols();
    if i >= j || j >= l {
        return invalid(format!(
            "quadruples need i < j < L, got i = {i}, j = {j}, L = {l}"
        ));
    }
    if pair.is_equal() || !is_critical_pair(pair)? {
        return Err(Error::ContractViolation(
            "match quadruples exist only for critical pairs".into(),
        ));
    }
    let d = pair.delta();
    let broken = || Error::ContractViolation("deltas admit no consistent row matching".into());
    let pi_i = column_matching(&d.delta_a, &d.delta_b, i).ok_or_else(broken)?;
    let pi_j = column_matching(&d.delta_a, &d.delta_b, j).ok_or_else(broken)?;
    let mut pi_j_inv = vec![usize::MAX; d.delta_b.n_rows()];
    for (s, &t) in pi_j.iter().enumerate() {
        pi_j_inv[t] = s;
    }

    let mut used = vec![false; d.delta_a.n_rows()];
    let mut quads = Vec::new();
    for s1 in 0..d.delta_a.n_rows() {
        if used[s1] {
            continue;
        }
        let s2 = pi_j[s1];
        let r2 = pi_i[s1];
        let r1 = pi_j_inv[r2];
        if r1 == usize::MAX || used[r1] || r1 == s1 || pi_i[r1] != s2 {
            return Err(broken());
        }
        used[s1] = true;
        used[r1] = true;
        quads.push((s1, r1, s2, r2));
    }
    Ok(QuadruplePartition {
        i,
        j,
        delta_a: d.delta_a,
        delta_b: d.delta_b,
        quads,
    })
}

/// Checks the match-quadruple conditions entry by entry.
pub fn is_match_quadruple(
    delta_a: &BinaryMatrix,
    delta_b: &BinaryMatrix,
    quad: (usize, usize, usize, usize),
    i: usize,
    j: usize,
) -> bool {
    let (s1, r1, s2, r2) = quad;
    if s1 >= delta_a.n_rows()
        || r1 >= delta_a.n_rows()
        || s2 >= delta_b.n_rows()
        || r2 >= delta_b.n_rows()
    {
        return false;
    }
    let a = |row, col| delta_a.bit(row, col);
    let b = |row, col| delta_b.bit(row, col);
    let pairs_ok = a(s1, i) == b(s2, i)
        && a(s1, j) != b(s2, j)
        && a(r1, i) == b(r2, i)
        && a(r1, j) != b(r2, j)
        && a(s1, j) == b(r2, j)
        && a(s1, i) != b(r2, i)
        && b(s2, j) == a(r1, j)
        && b(s2, i) != a(r1, i);
    let rest_ok = (0..delta_a.n_cols())
        .filter(|&k| k != i && k != j)
        .all(|k| {
            let v = a(s1, k);
            b(s2, k) == v && a(r1, k) == v && b(r2, k) == v
        });
    pairs_ok && rest_ok
}

/// Verifies that `part` covers every delta row exactly once with valid
/// quadruples.
pub fn verify_partition(part: &QuadruplePartition) -> bool {
    let mut seen_a = vec![0u32; part.delta_a.n_rows()];
    let mut seen_b = vec![0u32; part.delta_b.n_rows()];
    for &q in &part.quads {
        if !is_match_quadruple(&part.delta_a, &part.delta_b, q, part.i, part.j) {
            return false;
        }
        seen_a[q.0] += 1;
        seen_a[q.1] += 1;
        seen_b[q.2] += 1;
        seen_b[q.3] += 1;
    }
    seen_a.iter().chain(&seen_b).all(|&c| c == 1)
}

/// Order of pairwise merges once the pair is critical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeOrder {
    /// Always merge columns 0 and 1.
    #[default]
    LeftToRight,
    /// Always merge the last two columns.
    RightToLeft,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReductionOptions {
    pub merge_order: MergeOrder,
    /// Record the Chernoff information after every reduction step.
    pub record_ci: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminatedColumn {
    /// Index in the original matrices.
    pub original: usize,
    /// Index at the time of removal.
    pub position: usize,
    /// The column was constant and identical across both matrices, so the
    /// elimination preserves the Chernoff information.
    pub lossless: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrace {
    pub eliminated_columns: Vec<EliminatedColumn>,
    /// Original indices of the columns that survive elimination.
    pub surviving_columns: Vec<usize>,
    /// `(i, j)` positions merged at each step.
    pub merged_sequence: Vec<(usize, usize)>,
    pub alpha: usize,
    pub final_pair: MatrixPair,
    pub f_br: f64,
    pub p_br_a: f64,
    pub p_br_b: f64,
    /// Chernoff information of the input followed by one entry per step,
    /// when requested.
    pub step_ci: Option<Vec<f64>>,
}

impl ReductionTrace {
    /// `|p_br_a - p_br_b|`.
    pub fn gap(&self) -> f64 {
        (self.p_br_a - self.p_br_b).abs()
    }
}

fn column_is_shared_constant(pair: &MatrixPair, col: usize) -> bool {
    let first = pair.a.bit(0, col);
    (0..pair.n_rows()).all(|r| pair.a.bit(r, col) == first && pair.b.bit(r, col) == first)
}

/// Parameter `P(1)` of a one-column mixture.
fn one_column_parameter(m: &BinaryMatrix, f: f64) -> f64 {
    let ones = m.rows().iter().filter(|&&r| r == 1).count() as f64;
    let n = m.n_rows() as f64;
    (ones * (1.0 - f) + (n - ones) * f) / n
}

/// Eliminates non-critical columns (lowest index first, re-scanning after
/// every removal) and then merges the critical pair down to one column.
pub fn full_reduction(pair: &MatrixPair) -> Result<ReductionTrace> {
    full_reduction_with(pair, ReductionOptions::default())
}

pub fn full_reduction_with(pair: &MatrixPair, opts: ReductionOptions) -> Result<ReductionTrace> {
    if pair.is_equal() {
        return invalid("cannot reduce an equal pair");
    }
    let mut current = pair.clone();
    let mut labels: Vec<usize> = (0..pair.n_cols()).collect();
    let mut eliminated = Vec::new();
    let mut step_ci = if opts.record_ci {
        Some(vec![current.chernoff()?])
    } else {
        None
    };

    'scan: loop {
        for col in 0..current.n_cols() {
            if !is_critical_column(&current, col)? {
                let lossless = column_is_shared_constant(&current, col);
                current = eliminate_column(&current, col)?;
                eliminated.push(EliminatedColumn {
                    original: labels.remove(col),
                    position: col,
                    lossless,
                });
                if let Some(v) = step_ci.as_mut() {
                    v.push(current.chernoff()?);
                }
                continue 'scan;
            }
        }
        break;
    }

    let surviving_columns = labels;
    let mut merged_sequence = Vec::new();
    while current.n_cols() > 1 {
        let (i, j) = match opts.merge_order {
            MergeOrder::LeftToRight => (0, 1),
            MergeOrder::RightToLeft => (current.n_cols() - 2, current.n_cols() - 1),
        };
        current = merge_columns(&current, i, j)?;
        merged_sequence.push((i, j));
        if let Some(v) = step_ci.as_mut() {
            v.push(current.chernoff()?);
        }
    }

    let f_br = current.profile.get(0);
    let p_br_a = one_column_parameter(&current.a, f_br);
    let p_br_b = one_column_parameter(&current.b, f_br);
    Ok(ReductionTrace {
        alpha: eliminated.len(),
        eliminated_columns: eliminated,
        surviving_columns,
        merged_sequence,
        final_pair: current,
        f_br,
        p_br_a,
        p_br_b,
        step_ci,
    })
}

/// Guaranteed Bernoulli gap `2^{h-1} Π |g(f_l)| / N` over the surviving
/// flip rates.
pub fn gap_lower_bound(n_rows: usize, surviving_flips: &[f64]) -> f64 {
    let h = surviving_flips.len() as i32;
    let prod: f64 = surviving_flips.iter().map(|&f| g_map(f).abs()).product();
    2f64.powi(h - 1) * prod / n_rows as f64
}

/// Lower bound `-log sqrt(1 - ℘²)` on the pair's Chernoff information, with
/// `℘ = [2(1-2f)]^{L-α} / (2N)`. Requires a constant profile.
pub fn lower_bound_lb(pair: &MatrixPair) -> Result<f64> {
    let Some(f) = pair.profile.as_constant() else {
        return invalid("lower_bound_lb needs a constant flip profile; use the generalized bounds");
    };
    let trace = full_reduction(pair)?;
    let h = (pair.n_cols() - trace.alpha) as i32;
    let wp = (2.0 * g_map(f).abs()).powi(h) / (2.0 * pair.n_rows() as f64);
    symmetric_ci(wp.min(1.0))
}
