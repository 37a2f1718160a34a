//! Chernoff information between discrete distributions.
//!
//! `C(P1, P2) = -min_{λ∈[0,1]} log Σ_x P1(x)^λ P2(x)^{1-λ}`, in nats.
//!
//! `log f_λ` is a log-sum-exp of functions affine in λ, hence convex, and a
//! golden-section search over `[0, 1]` finds its minimum. Outcomes outside
//! the common support contribute nothing for λ in the open interval, and the
//! endpoints are taken as one-sided limits, so `f_0 = Σ_{P1>0} P2`.

use crate::error::{invalid, Result};
use crate::matrix::MixtureDistribution;

/// Width of the final λ bracket.
pub const LAMBDA_TOL: f64 = 1e-12;
/// Iteration cap of the golden-section search.
pub const MAX_ITERATIONS: usize = 200;
/// Per-component tolerance under which two distributions count as identical.
pub const IDENTICAL_TOL: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a Chernoff information computation.
///
/// `value` is `f64::INFINITY` exactly when the supports are disjoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffResult {
    pub value: f64,
    pub lambda_star: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ChernoffResult {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// `Σ_x p1(x)^λ p2(x)^{1-λ}` with `0^λ c = 0`.
pub fn f_lambda(p1: &MixtureDistribution, p2: &MixtureDistribution, lambda: f64) -> Result<f64> {
    f_lambda_probs(p1.probs(), p2.probs(), lambda)
}

/// [`f_lambda`] over raw probability slices.
pub fn f_lambda_probs(p1: &[f64], p2: &[f64], lambda: f64) -> Result<f64> {
    check_dims(p1, p2)?;
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("lambda = {lambda} outside [0, 1]"));
    }
    let s = p1
        .iter()
        .zip(p2)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| a.powf(lambda) * b.powf(1.0 - lambda))
        .sum();
    Ok(s)
}

/// Chernoff information between two mixtures.
pub fn chernoff_info(p1: &MixtureDistribution, p2: &MixtureDistribution) -> Result<ChernoffResult> {
    chernoff_info_probs(p1.probs(), p2.probs())
}

/// Chernoff information between two probability vectors of equal length.
pub fn chernoff_info_probs(p1: &[f64], p2: &[f64]) -> Result<ChernoffResult> {
    check_dims(p1, p2)?;
    if p1
        .iter()
        .zip(p2)
        .all(|(a, b)| (a - b).abs() <= IDENTICAL_TOL)
    {
        return Ok(ChernoffResult {
            value: 0.0,
            lambda_star: 0.5,
            iterations: 0,
            converged: true,
        });
    }
    let terms = LogTerms::new(p1, p2);
    if terms.is_empty() {
        return Ok(ChernoffResult {
            value: f64::INFINITY,
            lambda_star: 0.5,
            iterations: 0,
            converged: true,
        });
    }
    Ok(terms.minimize())
}

/// `-log f_{1/2}`, the Bhattacharyya distance. Since λ = 1/2 is feasible it
/// never exceeds the Chernoff information.
pub fn bhattacharyya_distance(p1: &[f64], p2: &[f64]) -> Result<f64> {
    let bc = f_lambda_probs(p1, p2, 0.5)?;
    Ok(if bc > 0.0 { -bc.ln() } else { f64::INFINITY })
}

/// Chernoff information between `Bernoulli(p)` and `Bernoulli(q)`.
pub fn bernoulli_ci(p: f64, q: f64) -> Result<f64> {
    for x in [p, q] {
        if !(0.0..=1.0).contains(&x) {
            return invalid(format!("Bernoulli parameter {x} outside [0, 1]"));
        }
    }
    Ok(chernoff_info_probs(&[1.0 - p, p], &[1.0 - q, q])?.value)
}

/// Closed form `-log sqrt(1 - ε²)` of the Chernoff information between
/// `Bernoulli((1-ε)/2)` and `Bernoulli((1+ε)/2)`.
pub fn symmetric_ci(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("epsilon = {epsilon} outside [0, 1]"));
    }
    if epsilon == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-0.5 * (-epsilon * epsilon).ln_1p())
}

fn check_dims(p1: &[f64], p2: &[f64]) -> Result<()> {
    if p1.len() != p2.len() {
        return invalid(format!(
            "dimension mismatch: {} vs {} outcomes",
            p1.len(),
            p2.len()
        ));
    }
    Ok(())
}

/// Log-probabilities over the common support.
struct LogTerms {
    log1: Vec<f64>,
    log2: Vec<f64>,
}

impl LogTerms {
    fn new(p1: &[f64], p2: &[f64]) -> Self {
        let (log1, log2) = p1
            .iter()
            .zip(p2)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| (a.ln(), b.ln()))
            .unzip();
        Self { log1, log2 }
    }

    fn is_empty(&self) -> bool {
        self.log1.is_empty()
    }

    /// `log f_λ` via log-sum-exp.
    fn log_f(&self, lambda: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (a, b) in self.log1.iter().zip(&self.log2) {
            max = max.max(lambda * a + (1.0 - lambda) * b);
        }
        let s: f64 = self
            .log1
            .iter()
            .zip(&self.log2)
            .map(|(a, b)| (lambda * a + (1.0 - lambda) * b - max).exp())
            .sum();
        max + s.ln()
    }

    fn minimize(&self) -> ChernoffResult {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut h1 = self.log_f(x1);
        let mut h2 = self.log_f(x2);
        let mut iterations = 0;
        while hi - lo > LAMBDA_TOL && iterations < MAX_ITERATIONS {
            iterations += 1;
            if h1 <= h2 {
                hi = x2;
                x2 = x1;
                h2 = h1;
                x1 = hi - INV_PHI * (hi - lo);
                h1 = self.log_f(x1);
            } else {
                lo = x1;
                x1 = x2;
                h1 = h2;
                x2 = lo + INV_PHI * (hi - lo);
                h2 = self.log_f(x2);
            }
        }
        let converged = hi - lo <= LAMBDA_TOL;
        let mid = 0.5 * (lo + hi);
        let candidates = [
            (mid, self.log_f(mid)),
            (x1, h1),
            (x2, h2),
            (0.0, self.log_f(0.0)),
            (1.0, self.log_f(1.0)),
        ];
        let (lambda_star, h_min) =
            candidates.into_iter().fold(
                (0.5, f64::INFINITY),
                |best, c| if c.1 < best.1 { c } else { best },
            );
        ChernoffResult {
            value: (-h_min).max(0.0),
            lambda_star,
            iterations,
            converged,
        }
    }
}
