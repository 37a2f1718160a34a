//! Source matrices, flip profiles and the mixture distribution they induce.
//!
//! A source is an `N x L` binary matrix whose rows are the latent mother
//! sequences. Row order carries no information, so a [`BinaryMatrix`] is kept
//! as a sorted multiset of `L`-bit words where bit `l` holds column `l`.
//!
//! In the text format a row is written most significant column first, so the
//! word `0b01` with `L = 2` prints as `01` and has column 0 set.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Largest supported column count. Mixtures are stored densely over `2^L`
/// outcomes.
pub const MAX_COLS: usize = 30;

/// Tolerance on the total mass of a probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A multiset of `N` binary rows of length `L`, stored in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryMatrix {
    rows: Vec<u32>,
    n_cols: usize,
}

impl BinaryMatrix {
    /// Builds the canonical (sorted) form of `rows`.
    pub fn canonicalize(rows: impl Into<Vec<u32>>, n_cols: usize) -> Result<Self> {
        let mut rows = rows.into();
        check_cols(n_cols)?;
        if rows.is_empty() {
            return invalid("a matrix needs at least one row");
        }
        if let Some(&bad) = rows.iter().find(|&&r| !fits(r, n_cols)) {
            return invalid(format!("row word {bad:#b} does not fit in {n_cols} bits"));
        }
        rows.sort_unstable();
        Ok(Self { rows, n_cols })
    }

    /// Sorted rows that may be empty; used for delta matrices.
    pub(crate) fn from_sorted(rows: Vec<u32>, n_cols: usize) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0] <= w[1]));
        Self { rows, n_cols }
    }

    /// Builds a matrix from arbitrary (possibly empty) rows without the
    /// `N >= 1` requirement.
    pub(crate) fn from_rows_unchecked(mut rows: Vec<u32>, n_cols: usize) -> Self {
        rows.sort_unstable();
        Self { rows, n_cols }
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Value of entry (`row`, `col`) as 0 or 1.
    pub fn bit(&self, row: usize, col: usize) -> u32 {
        (self.rows[row] >> col) & 1
    }

    /// Distinct rows with their multiplicities, in ascending order.
    pub fn multiplicities(&self) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for &r in &self.rows {
            match out.last_mut() {
                Some((v, c)) if *v == r => *c += 1,
                _ => out.push((r, 1)),
            }
        }
        out
    }

    /// Removes column `col`, shifting higher columns down by one.
    pub fn without_column(&self, col: usize) -> Result<Self> {
        if col >= self.n_cols {
            return invalid(format!("column {col} out of range for L = {}", self.n_cols));
        }
        let rows = self.rows.iter().map(|&r| delete_bit(r, col)).collect();
        Ok(Self::from_rows_unchecked(rows, self.n_cols - 1))
    }

    /// Rows rendered in the text format, most significant column first.
    pub fn row_strings(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|&r| format_row(r, self.n_cols))
            .collect()
    }

    /// Parses the text format: one row per line, `0`/`1` characters only, a
    /// blank line (or end of input) terminates the matrix.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut width: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                break;
            }
            let w = line.len();
            match width {
                None => width = Some(w),
                Some(prev) if prev != w => {
                    return invalid(format!(
                        "ragged row on line {}: expected {prev} columns, found {w}",
                        lineno + 1
                    ))
                }
                _ => {}
            }
            rows.push(parse_row(line).map_err(|e| match e {
                Error::InvalidInput(m) => Error::InvalidInput(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?);
        }
        let n_cols = width.ok_or_else(|| Error::InvalidInput("matrix text has no rows".into()))?;
        Self::canonicalize(rows, n_cols)
    }

    /// Text form accepted by [`BinaryMatrix::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.row_strings() {
            s.push_str(&row);
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.row_strings().join(","))
    }
}

/// Convenience wrapper for [`BinaryMatrix::canonicalize`].
pub fn canonicalize(rows: &[u32], n_cols: usize) -> Result<BinaryMatrix> {
    BinaryMatrix::canonicalize(rows.to_vec(), n_cols)
}

pub(crate) fn check_cols(n_cols: usize) -> Result<()> {
    if n_cols == 0 || n_cols > MAX_COLS {
        return invalid(format!(
            "column count must be in 1..={MAX_COLS}, got {n_cols}"
        ));
    }
    Ok(())
}

fn fits(word: u32, n_cols: usize) -> bool {
    n_cols >= 32 || word >> n_cols == 0
}

pub(crate) fn delete_bit(word: u32, col: usize) -> u32 {
    let low = word & ((1u32 << col) - 1);
    let high = (word >> (col + 1)) << col;
    low | high
}

pub fn format_row(word: u32, n_cols: usize) -> String {
    (0..n_cols)
        .rev()
        .map(|c| if (word >> c) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_row(s: &str) -> Result<u32> {
    if s.is_empty() || s.len() > MAX_COLS {
        return invalid(format!("row '{s}' must have 1..={MAX_COLS} characters"));
    }
    let mut word = 0u32;
    for ch in s.chars() {
        word <<= 1;
        match ch {
            '0' => {}
            '1' => word |= 1,
            other => return invalid(format!("unexpected character '{other}' in row '{s}'")),
        }
    }
    Ok(word)
}

/// Per-column flip probabilities of the binary symmetric channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipProfile {
    flips: Vec<f64>,
}

impl FlipProfile {
    pub fn new(flips: Vec<f64>) -> Result<Self> {
        if flips.is_empty() {
            return invalid("flip profile must be non-empty");
        }
        if let Some(bad) = flips.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return invalid(format!("flip probability {bad} outside [0, 1]"));
        }
        Ok(Self { flips })
    }

    /// The same flip probability `f` on each of `n_cols` columns.
    pub fn constant(f: f64, n_cols: usize) -> Result<Self> {
        Self::new(vec![f; n_cols])
    }

    pub fn flips(&self) -> &[f64] {
        &self.flips
    }

    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn get(&self, col: usize) -> f64 {
        self.flips[col]
    }

    /// `Some(f)` when every column shares the flip probability `f`.
    pub fn as_constant(&self) -> Option<f64> {
        let first = self.flips[0];
        self.flips.iter().all(|&f| f == first).then_some(first)
    }

    /// Maps every `f > 1/2` to `1 - f`. Returns the folded profile and whether
    /// anything changed.
    pub fn folded(&self) -> (Self, bool) {
        let mut changed = false;
        let flips = self
            .flips
            .iter()
            .map(|&f| {
                if f > 0.5 {
                    changed = true;
                    1.0 - f
                } else {
                    f
                }
            })
            .collect();
        (Self { flips }, changed)
    }

    pub(crate) fn without(&self, col: usize) -> Self {
        let mut flips = self.flips.clone();
        flips.remove(col);
        Self { flips }
    }

    pub(crate) fn from_vec_unchecked(flips: Vec<f64>) -> Self {
        Self { flips }
    }
}

/// Dense distribution over the `2^L` binary outcomes, indexed by outcome word.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDistribution {
    probs: Vec<f64>,
    n_cols: usize,
}

impl MixtureDistribution {
    /// Wraps an explicit probability vector. The length must be `2^L` for some
    /// `1 <= L <= 30`; the entries must be non-negative and sum to one within
    /// [`NORMALIZATION_TOL`].
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let len = probs.len();
        if len < 2 || !len.is_power_of_two() {
            return invalid(format!(
                "outcome space of size {len} is not 2^L with L >= 1"
            ));
        }
        let n_cols = len.trailing_zeros() as usize;
        check_cols(n_cols)?;
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return invalid(format!(
                "probability {bad} is not a finite non-negative number"
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs, n_cols })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn prob(&self, outcome: u32) -> f64 {
        self.probs[outcome as usize]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Output distribution of a source observed through the channel: each row is
/// picked with weight `1/N`, then every column `l` is flipped independently
/// with probability `f_l`.
pub fn mixture_distribution(m: &BinaryMatrix, fp: &FlipProfile) -> Result<MixtureDistribution> {
    if fp.len() != m.n_cols() {
        return invalid(format!(
            "flip profile has {} entries but the matrix has {} columns",
            fp.len(),
            m.n_cols()
        ));
    }
    if m.is_empty() {
        return invalid("cannot build the distribution of an empty matrix");
    }
    let n_cols = m.n_cols();
    let size = 1usize << n_cols;
    let weight = 1.0 / m.n_rows() as f64;
    let mut probs = vec![0.0; size];
    let mut kernel = vec![0.0; size];
    for (row, count) in m.multiplicities() {
        row_kernel(row, fp.flips(), &mut kernel);
        let w = weight * count as f64;
        for (p, k) in probs.iter_mut().zip(&kernel) {
            *p += w * k;
        }
    }
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOL);
    Ok(MixtureDistribution { probs, n_cols })
}

/// Fills `out[a] = prod_l P(a_l | row_l)` for every outcome `a`.
fn row_kernel(row: u32, flips: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut len = 1usize;
    for (col, &f) in flips.iter().enumerate() {
        let bit = (row >> col) & 1;
        let (p0, p1) = if bit == 0 { (1.0 - f, f) } else { (f, 1.0 - f) };
        for idx in 0..len {
            let base = out[idx];
            out[idx] = base * p0;
            out[idx | (1 << col)] = base * p1;
        }
        len <<= 1;
    }
}

/// The two matrices left after removing a maximal matching of equal rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaResult {
    pub delta_a: BinaryMatrix,
    pub delta_b: BinaryMatrix,
    pub removed_count: usize,
}

/// Removes equal rows pairwise from `a` and `b` until the two multisets share
/// no row value.
pub fn delta_reduce(a: &BinaryMatrix, b: &BinaryMatrix) -> Result<DeltaResult> {
    if a.n_cols() != b.n_cols() || a.n_rows() != b.n_rows() {
        return invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.n_rows(),
            a.n_cols(),
            b.n_rows(),
            b.n_cols()
        ));
    }
    let (ra, rb) = (a.rows(), b.rows());
    let (mut i, mut j) = (0, 0);
    let mut da = Vec::new();
    let mut db = Vec::new();
    let mut removed = 0;
    while i < ra.len() && j < rb.len() {
        match ra[i].cmp(&rb[j]) {
            std::cmp::Ordering::Equal => {
                removed += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                da.push(ra[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                db.push(rb[j]);
                j += 1;
            }
        }
    }
    da.extend_from_slice(&ra[i..]);
    db.extend_from_slice(&rb[j..]);
    Ok(DeltaResult {
        delta_a: BinaryMatrix::from_sorted(da, a.n_cols()),
        delta_b: BinaryMatrix::from_sorted(db, b.n_cols()),
        removed_count: removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&str]) -> BinaryMatrix {
        BinaryMatrix::parse(&rows.join("\n")).unwrap()
    }

    #[test]
    fn canonicalize_sorts() {
        let x = canonicalize(&[0b10, 0b01], 2).unwrap();
        assert_eq!(x.rows(), &[0b01, 0b10]);
        let x = canonicalize(&[0b11, 0b11], 2).unwrap();
        assert_eq!(x.rows(), &[0b11, 0b11]);
        let x = canonicalize(&[1, 0, 1], 1).unwrap();
        assert_eq!(x.rows(), &[0, 1, 1]);
        assert_eq!(canonicalize(x.rows(), 1).unwrap(), x);
    }

    #[test]
    fn canonicalize_rejects_wide_words() {
        assert!(matches!(
            canonicalize(&[0b100], 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(canonicalize(&[], 2).is_err());
        assert!(canonicalize(&[0], 0).is_err());
        assert!(canonicalize(&[0], 31).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let x = m(&["10", "01", "11"]);
        assert_eq!(x.rows(), &[1, 2, 3]);
        assert_eq!(x.to_text(), "01\n10\n11\n");
        assert_eq!(BinaryMatrix::parse(&x.to_text()).unwrap(), x);
        // blank line terminates
        let y = BinaryMatrix::parse("1\n0\n\n1\n").unwrap();
        assert_eq!(y.n_rows(), 2);
    }

    #[test]
    fn parser_rejects_bad_input() {
        assert!(BinaryMatrix::parse("10\n1\n").is_err());
        assert!(BinaryMatrix::parse("1a\n").is_err());
        assert!(BinaryMatrix::parse("\n").is_err());
        assert!(BinaryMatrix::parse("").is_err());
    }

    #[test]
    fn single_row_channel_law() {
        let x = canonicalize(&[0], 1).unwrap();
        let p = mixture_distribution(&x, &FlipProfile::constant(0.1, 1).unwrap()).unwrap();
        assert!((p.prob(0) - 0.9).abs() < 1e-15);
        assert!((p.prob(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn balanced_rows_give_uniform_bit() {
        let x = canonicalize(&[0, 1], 1).unwrap();
        for f in [0.0, 0.1, 0.37, 1.0] {
            let p = mixture_distribution(&x, &FlipProfile::constant(f, 1).unwrap()).unwrap();
            assert!((p.prob(0) - 0.5).abs() < 1e-15);
            assert!((p.prob(1) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn three_row_mixture_matches_eta_form() {
        let x = canonicalize(&[0, 0, 1], 1).unwrap();
        let p = mixture_distribution(&x, &FlipProfile::constant(0.1, 1).unwrap()).unwrap();
        let eta = (1.0 - 2.0 * 0.1) / 3.0;
        assert!((p.prob(0) - 1.9 / 3.0).abs() < 1e-15);
        assert!((p.prob(1) - 1.1 / 3.0).abs() < 1e-15);
        assert!((p.prob(0) - (1.0 + eta) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn profile_length_mismatch() {
        let x = canonicalize(&[0, 3], 2).unwrap();
        let fp = FlipProfile::constant(0.1, 3).unwrap();
        assert!(matches!(
            mixture_distribution(&x, &fp),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(FlipProfile::new(vec![0.1, 1.2]).is_err());
        assert!(FlipProfile::new(vec![f64::NAN]).is_err());
        assert!(FlipProfile::new(vec![]).is_err());
        let (folded, changed) = FlipProfile::new(vec![0.9, 0.2]).unwrap().folded();
        assert!(changed);
        assert!((folded.get(0) - 0.1).abs() < 1e-15);
        assert_eq!(
            FlipProfile::new(vec![0.3, 0.3]).unwrap().as_constant(),
            Some(0.3)
        );
        assert_eq!(
            FlipProfile::new(vec![0.3, 0.1]).unwrap().as_constant(),
            None
        );
    }

    #[test]
    fn from_probs_checks_mass() {
        assert!(MixtureDistribution::from_probs(vec![0.5, 0.5]).is_ok());
        assert!(MixtureDistribution::from_probs(vec![0.5, 0.4]).is_err());
        assert!(MixtureDistribution::from_probs(vec![1.0, 0.0, 0.0]).is_err());
        assert!(MixtureDistribution::from_probs(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = delta_reduce(&m(&["00", "01"]), &m(&["00", "10"])).unwrap();
        assert_eq!(d.delta_a, m(&["01"]));
        assert_eq!(d.delta_b, m(&["10"]));
        assert_eq!(d.removed_count, 1);

        let a = m(&["00", "11", "01"]);
        let d = delta_reduce(&a, &a).unwrap();
        assert!(d.delta_a.is_empty() && d.delta_b.is_empty());
        assert_eq!(d.removed_count, 3);

        let d = delta_reduce(&m(&["0", "0", "1"]), &m(&["0", "1", "1"])).unwrap();
        assert_eq!(d.delta_a.rows(), &[0]);
        assert_eq!(d.delta_b.rows(), &[1]);
        assert_eq!(d.removed_count, 2);
    }

    #[test]
    fn delta_shape_mismatch() {
        assert!(delta_reduce(&m(&["00"]), &m(&["000"])).is_err());
        assert!(delta_reduce(&m(&["00"]), &m(&["00", "01"])).is_err());
    }

    #[test]
    fn column_removal() {
        let x = m(&["110", "011"]);
        let y = x.without_column(1).unwrap();
        assert_eq!(y.n_cols(), 2);
        assert_eq!(y.row_strings(), vec!["01", "10"]);
        assert!(x.without_column(3).is_err());
    }
}
