//! Worst-case bounds on the minimum Chernoff information `C*(N, L)` and the
//! source pairs that attain or approach them.
//!
//! Two regimes meet at `f = 1/4`, where `2(1 - 2f) = 1`:
//!
//! * `f <= 1/4`: the closest pairs differ by one row in a single column and
//!   `C* >= -log sqrt(1 - η²)` with `η = (1 - 2f)/N` (equality for odd `N`).
//! * `f > 1/4`: the closest pairs split even- and odd-weight words over
//!   `𝓛 = min(L, ⌊log₂N⌋ + 1)` columns and
//!   `C* >= -log sqrt(1 - ε²)` with `ε = [2(1 - 2f)]^𝓛 / (2N)`.
//!
//! All values are in nats.

use crate::chernoff::symmetric_ci;
use crate::error::{invalid, Error, Result};
use crate::matrix::{check_cols, BinaryMatrix, FlipProfile};
use crate::reductions::{g_map, MatrixPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LowNoiseOdd,
    LowNoiseEven,
    HighNoise,
    Generalized,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LowNoiseOdd => "low_noise_odd",
            Regime::LowNoiseEven => "low_noise_even",
            Regime::HighNoise => "high_noise",
            Regime::Generalized => "generalized",
        }
    }
}

/// `N = 2^{cal_l - 1} k + r` together with the perturbation sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// `𝓛` for constant profiles, `𝒦` for the generalized bound.
    pub cal_l: usize,
    pub k: usize,
    pub r: usize,
    pub epsilon: f64,
    /// `(1 - 2f)/N`, constant profiles only.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    pub regime: Regime,
    pub tight: bool,
    pub decomposition: Decomposition,
    /// Some flip rate above 1/2 was replaced by its complement.
    pub folded: bool,
}

pub(crate) fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// `min(L, ⌊log₂N⌋ + 1)`.
pub fn effective_columns(n_rows: usize, n_cols: usize) -> usize {
    n_cols.min(floor_log2(n_rows) + 1)
}

/// Splits `N = 2^{cal_l - 1} k + R` with `k` the largest odd integer such that
/// `2^{cal_l - 1} k <= N`. Then `0 <= R < 2^{cal_l}`.
pub fn decompose(n_rows: usize, cal_l: usize) -> Result<(usize, usize)> {
    if cal_l == 0 || cal_l > 63 {
        return invalid(format!("cal_L = {cal_l} must be in 1..=63"));
    }
    let block = 1usize << (cal_l - 1);
    if n_rows < block {
        return invalid(format!(
            "N = {n_rows} is smaller than 2^(cal_L-1) = {block}"
        ));
    }
    let q = n_rows / block;
    let k = if q % 2 == 1 { q } else { q - 1 };
    let r = n_rows - block * k;
    debug_assert!(r < 2 * block);
    Ok((k, r))
}

fn check_rate(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return invalid(format!("flip probability {f} outside [0, 1]"));
    }
    Ok(())
}

fn check_shape(n_rows: usize, n_cols: usize) -> Result<()> {
    if n_rows == 0 {
        return invalid("N must be at least 1");
    }
    if n_cols == 0 {
        return invalid("L must be at least 1");
    }
    Ok(())
}

fn fold(f: f64) -> (f64, bool) {
    if f > 0.5 {
        (1.0 - f, true)
    } else {
        (f, false)
    }
}

/// `-log(sqrt(((N-R)/N)² - ε²) + R/N)`, written as `-log(1 - δ)` with
/// `δ = ε² / (a + sqrt(a² - ε²))`, `a = (N-R)/N`.
fn near_optimal_upper(n_rows: usize, r: usize, epsilon: f64) -> f64 {
    let a = (n_rows - r) as f64 / n_rows as f64;
    let root = (a * a - epsilon * epsilon).max(0.0).sqrt();
    let delta = epsilon * epsilon / (a + root);
    -(-delta).ln_1p()
}

/// `-log((N-1)/N · sqrt(1 - η_{N-1}²) + 1/N)` for even `N`, in the same
/// cancellation-free form.
fn even_upper(n_rows: usize, g: f64) -> f64 {
    let n = n_rows as f64;
    let eta = g / (n - 1.0);
    let root = (1.0 - eta * eta).max(0.0).sqrt();
    let delta = (n - 1.0) / n * eta * eta / (1.0 + root);
    -(-delta).ln_1p()
}

/// Equality conditions: `N` a power of two with `N <= 2^{c-1}`, or
/// `N = 2^{c-1}(2n+1)` for a positive integer `n`.
pub fn equality_condition(n_rows: usize, c: usize) -> bool {
    if c == 0 || c > 63 {
        return false;
    }
    let block = 1usize << (c - 1);
    let pow2 = n_rows.is_power_of_two() && n_rows <= block;
    let odd_multiple =
        n_rows.is_multiple_of(block) && (n_rows / block) % 2 == 1 && n_rows / block >= 3;
    pow2 || odd_multiple
}

/// Bounds on `C*(N, L)` for a constant flip rate.
pub fn theorem1_bounds(n_rows: usize, n_cols: usize, f: f64) -> Result<BoundReport> {
    check_shape(n_rows, n_cols)?;
    check_rate(f)?;
    let (f, folded) = fold(f);
    let g = g_map(f);
    let n = n_rows as f64;
    let eta = g / n;
    let cal_l = effective_columns(n_rows, n_cols);
    let (k, r) = decompose(n_rows, cal_l)?;
    let epsilon = (2.0 * g).powi(cal_l as i32) / (2.0 * n);
    let decomposition = Decomposition {
        cal_l,
        k,
        r,
        epsilon,
        eta: Some(eta),
    };
    let report = if f <= 0.25 {
        let lower = symmetric_ci(eta)?;
        if n_rows % 2 == 1 {
            BoundReport {
                lower,
                upper: lower,
                regime: Regime::LowNoiseOdd,
                tight: true,
                decomposition,
                folded,
            }
        } else {
            BoundReport {
                lower,
                upper: even_upper(n_rows, g),
                regime: Regime::LowNoiseEven,
                tight: false,
                decomposition,
                folded,
            }
        }
    } else {
        let lower = symmetric_ci(epsilon)?;
        let tight = equality_condition(n_rows, n_cols);
        let upper = if tight {
            lower
        } else {
            near_optimal_upper(n_rows, r, epsilon)
        };
        BoundReport {
            lower,
            upper,
            regime: Regime::HighNoise,
            tight,
            decomposition,
            folded,
        }
    };
    Ok(report)
}

/// Bounds on `C*(N, L, F)` for a per-column profile. Only columns with flip
/// rate above 1/4 enter the bound; a profile with none is rejected.
pub fn theorem2_bounds(n_rows: usize, n_cols: usize, profile: &FlipProfile) -> Result<BoundReport> {
    check_shape(n_rows, n_cols)?;
    if profile.len() != n_cols {
        return invalid(format!(
            "profile has {} entries for L = {n_cols}",
            profile.len()
        ));
    }
    let (profile, folded) = profile.folded();
    let gamma = profile.flips().iter().filter(|&&f| f > 0.25).count();
    if gamma == 0 {
        return Err(Error::UnsupportedRegime(
            "no column has flip rate above 1/4; the generalized bound is undefined".into(),
        ));
    }
    let cal_k = gamma.min(floor_log2(n_rows) + 1);
    let mut flips = profile.flips().to_vec();
    flips.sort_by(|a, b| b.total_cmp(a));
    let prod: f64 = flips[..cal_k].iter().map(|&f| g_map(f)).product();
    let epsilon = 2f64.powi(cal_k as i32 - 1) * prod / n_rows as f64;
    let (k, r) = decompose(n_rows, cal_k)?;
    let lower = symmetric_ci(epsilon)?;
    let tight = equality_condition(n_rows, gamma);
    let upper = if tight {
        lower
    } else {
        near_optimal_upper(n_rows, r, epsilon)
    };
    Ok(BoundReport {
        lower,
        upper,
        regime: Regime::Generalized,
        tight,
        decomposition: Decomposition {
            cal_l: cal_k,
            k,
            r,
            epsilon,
            eta: None,
        },
        folded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    OddN,
    EvenN,
    ParitySplit,
}

impl Construction {
    pub fn as_str(self) -> &'static str {
        match self {
            Construction::OddN => "odd_n",
            Construction::EvenN => "even_n",
            Construction::ParitySplit => "parity_split",
        }
    }
}

/// A candidate closest pair together with the Chernoff information it is
/// predicted to attain (`EvenN`, and `ParitySplit` with `R > 0`,
/// only guarantee an upper bound).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalPair {
    pub pair: MatrixPair,
    pub predicted_ci: f64,
    pub construction: Construction,
}

fn replicate(words: &[(u32, usize)]) -> Vec<u32> {
    words
        .iter()
        .flat_map(|&(w, c)| std::iter::repeat_n(w, c))
        .collect()
}

fn build_pair(a: Vec<u32>, b: Vec<u32>, n_cols: usize, f: f64) -> Result<MatrixPair> {
    MatrixPair::new(
        BinaryMatrix::canonicalize(a, n_cols)?,
        BinaryMatrix::canonicalize(b, n_cols)?,
        FlipProfile::constant(f, n_cols)?,
    )
}

/// Odd `N = 2n + 1`: `A` holds `n` copies of the zero word and `n + 1` copies
/// of the unit word on column 0; `B` swaps the counts.
pub fn construct_lemma4_pair(n_rows: usize, n_cols: usize, f: f64) -> Result<ExtremalPair> {
    check_cols(n_cols)?;
    check_rate(f)?;
    if n_rows.is_multiple_of(2) {
        return invalid(format!("the odd-N construction needs odd N, got {n_rows}"));
    }
    let n = n_rows / 2;
    let a = replicate(&[(0, n), (1, n + 1)]);
    let b = replicate(&[(0, n + 1), (1, n)]);
    let eta = g_map(fold(f).0) / n_rows as f64;
    Ok(ExtremalPair {
        pair: build_pair(a, b, n_cols, f)?,
        predicted_ci: symmetric_ci(eta)?,
        construction: Construction::OddN,
    })
}

/// Even `N = 2n`: `A` holds `n - 1` zero words and `n + 1` unit words, `B`
/// holds `n` of each. `predicted_ci` is an upper bound on its Chernoff
/// information.
pub fn construct_even_pair(n_rows: usize, n_cols: usize, f: f64) -> Result<ExtremalPair> {
    check_cols(n_cols)?;
    check_rate(f)?;
    if n_rows % 2 == 1 || n_rows < 2 {
        return invalid(format!(
            "the even-N construction needs even N >= 2, got {n_rows}"
        ));
    }
    let n = n_rows / 2;
    let a = replicate(&[(0, n - 1), (1, n + 1)]);
    let b = replicate(&[(0, n), (1, n)]);
    Ok(ExtremalPair {
        pair: build_pair(a, b, n_cols, f)?,
        predicted_ci: even_upper(n_rows, g_map(fold(f).0)),
        construction: Construction::EvenN,
    })
}

/// Parity-split pair over the last `𝓛` columns: `A` holds `n + 1` copies of
/// every even-weight word, `n` of every odd-weight word and `R` zero words;
/// `B` swaps the parities. The first `L - 𝓛` columns are zero in both.
pub fn construct_near_optimal_pair(n_rows: usize, n_cols: usize, f: f64) -> Result<ExtremalPair> {
    check_cols(n_cols)?;
    check_rate(f)?;
    if n_rows == 0 {
        return invalid("N must be at least 1");
    }
    let cal_l = effective_columns(n_rows, n_cols);
    let (k, r) = decompose(n_rows, cal_l)?;
    let n = (k - 1) / 2;
    let shift = n_cols - cal_l;
    let mut a = vec![0u32; r];
    let mut b = vec![0u32; r];
    for w in 0..(1u32 << cal_l) {
        let (ca, cb) = if w.count_ones() % 2 == 0 {
            (n + 1, n)
        } else {
            (n, n + 1)
        };
        a.extend(std::iter::repeat_n(w << shift, ca));
        b.extend(std::iter::repeat_n(w << shift, cb));
    }
    let g = g_map(fold(f).0);
    let epsilon = (2.0 * g).powi(cal_l as i32) / (2.0 * n_rows as f64);
    let predicted_ci = if r == 0 {
        symmetric_ci(epsilon)?
    } else {
        near_optimal_upper(n_rows, r, epsilon)
    };
    Ok(ExtremalPair {
        pair: build_pair(a, b, n_cols, f)?,
        predicted_ci,
        construction: Construction::ParitySplit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub f: f64,
    /// `-log sqrt(1 - η_N²)`.
    pub bound_low_noise: f64,
    /// `-log sqrt(1 - ε_{𝓛,N}²)`.
    pub bound_high_noise: f64,
}

/// `steps + 1` evenly spaced points from `f_min` to `f_max`.
pub fn sweep_grid(f_min: f64, f_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return invalid("a sweep needs at least one step");
    }
    if f_min.is_nan() || f_max.is_nan() || f_min > f_max {
        return invalid(format!("empty sweep range [{f_min}, {f_max}]"));
    }
    Ok((0..=steps)
        .map(|i| f_min + (f_max - f_min) * i as f64 / steps as f64)
        .collect())
}

/// Both regime bounds at each grid point. They coincide at `f = 1/4`.
pub fn phase_sweep(n_rows: usize, n_cols: usize, f_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_shape(n_rows, n_cols)?;
    if let Some(bad) = f_grid.iter().find(|f| !(0.0..=0.5).contains(*f)) {
        return invalid(format!("sweep grid value {bad} outside [0, 0.5]"));
    }
    let n = n_rows as f64;
    let cal_l = effective_columns(n_rows, n_cols) as i32;
    f_grid
        .iter()
        .map(|&f| {
            let g = g_map(f);
            let eta = g / n;
            let eps = ((2.0 * g).powi(cal_l) / (2.0 * n)).min(1.0);
            Ok(SweepRow {
                f,
                bound_low_noise: symmetric_ci(eta)?,
                bound_high_noise: symmetric_ci(eps)?,
            })
        })
        .collect()
}
