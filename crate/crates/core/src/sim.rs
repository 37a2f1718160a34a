//! Monte Carlo estimate of the error exponent of maximum-likelihood source
//! identification.
//!
//! Each trial draws `m` observations from the true matrix and scores every
//! canonical candidate of the same shape. A trial succeeds only when the
//! truth's log-likelihood strictly beats every other candidate, so ties count
//! as errors. Trials use ChaCha8 with the user seed and stream
//! `(m_index << 32) | trial`, which makes results independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::matrix::{mixture_distribution, BinaryMatrix, FlipProfile};
use crate::oracle::{enumerate_matrices_capped, DEFAULT_CAP};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Minimum number of usable points for [`fit_exponent`].
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub truth: BinaryMatrix,
    pub profile: FlipProfile,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(
        truth: BinaryMatrix,
        profile: FlipProfile,
        m_values: Vec<usize>,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            truth,
            profile,
            m_values,
            trials,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.m_values.is_empty() {
            return invalid("m_values must not be empty");
        }
        if self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!(
                "m_values {:?} are not strictly increasing",
                self.m_values
            ));
        }
        if self.profile.len() != self.truth.n_cols() {
            return invalid(format!(
                "profile has {} entries for L = {}",
                self.profile.len(),
                self.truth.n_cols()
            ));
        }
        Ok(())
    }
}

/// `m` observations: a uniformly chosen row of `truth` with each column
/// flipped independently.
pub fn sample_observations<R: Rng + ?Sized>(
    truth: &BinaryMatrix,
    profile: &FlipProfile,
    m: usize,
    rng: &mut R,
) -> Vec<u32> {
    let rows = truth.rows();
    let flips = profile.flips();
    (0..m)
        .map(|_| {
            let mut w = rows[rng.random_range(0..rows.len())];
            for (col, &f) in flips.iter().enumerate() {
                if rng.random::<f64>() < f {
                    w ^= 1 << col;
                }
            }
            w
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    /// Highest-likelihood candidate, the lexicographically first on ties.
    pub chosen: BinaryMatrix,
    /// The truth strictly beats every other candidate.
    pub correct: bool,
}

/// Maximum-likelihood decoder over every canonical `N × L` matrix.
#[derive(Debug, Clone)]
pub struct MlDecoder {
    candidates: Vec<BinaryMatrix>,
    /// `log P_X(y)` per candidate, indexed by the observed word.
    log_tables: Vec<Vec<f64>>,
    n_cols: usize,
}

impl MlDecoder {
    pub fn new(n_rows: usize, n_cols: usize, profile: &FlipProfile) -> Result<Self> {
        Self::with_cap(n_rows, n_cols, profile, DEFAULT_CAP)
    }

    pub fn with_cap(
        n_rows: usize,
        n_cols: usize,
        profile: &FlipProfile,
        cap: u128,
    ) -> Result<Self> {
        if profile.len() != n_cols {
            return invalid(format!(
                "profile has {} entries for L = {n_cols}",
                profile.len()
            ));
        }
        let candidates: Vec<BinaryMatrix> =
            enumerate_matrices_capped(n_rows, n_cols, cap)?.collect();
        let log_tables = candidates
            .iter()
            .map(|m| {
                mixture_distribution(m, profile).map(|d| d.probs().iter().map(|p| p.ln()).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            candidates,
            log_tables,
            n_cols,
        })
    }

    pub fn candidates(&self) -> &[BinaryMatrix] {
        &self.candidates
    }

    fn histogram(&self, observations: &[u32]) -> Result<Vec<u64>> {
        let mut hist = vec![0u64; 1 << self.n_cols];
        for &y in observations {
            match hist.get_mut(y as usize) {
                Some(c) => *c += 1,
                None => {
                    return invalid(format!(
                        "observation {y} has more than {} bits",
                        self.n_cols
                    ))
                }
            }
        }
        Ok(hist)
    }

    /// `Σ_j log P_X(y_j)` for every candidate; `-inf` when some observation
    /// has probability 0 under `X`.
    pub fn log_likelihoods(&self, observations: &[u32]) -> Result<Vec<f64>> {
        let hist = self.histogram(observations)?;
        Ok(self
            .log_tables
            .iter()
            .map(|table| {
                hist.iter()
                    .zip(table)
                    .filter(|(c, _)| **c > 0)
                    .map(|(&c, &lp)| c as f64 * lp)
                    .sum()
            })
            .collect())
    }

    pub fn decide(&self, observations: &[u32], truth: &BinaryMatrix) -> Result<Decision> {
        let t = self.candidates.binary_search(truth).map_err(|_| {
            Error::InvalidInput(format!("truth {truth} is not in the candidate space"))
        })?;
        let ll = self.log_likelihoods(observations)?;
        let mut best = 0;
        for (k, &v) in ll.iter().enumerate() {
            if v > ll[best] {
                best = k;
            }
        }
        let correct =
            ll[t] > f64::NEG_INFINITY && ll.iter().enumerate().all(|(k, &v)| k == t || ll[t] > v);
        Ok(Decision {
            chosen: self.candidates[best].clone(),
            correct,
        })
    }
}

/// One-shot maximum-likelihood decision for `observations` drawn from `truth`.
pub fn ml_decide(
    observations: &[u32],
    profile: &FlipProfile,
    truth: &BinaryMatrix,
) -> Result<Decision> {
    MlDecoder::new(truth.n_rows(), truth.n_cols(), profile)?.decide(observations, truth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPoint {
    pub m: usize,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    /// Wilson score interval at 95%.
    pub wilson: (f64, f64),
}

pub fn wilson_interval(errors: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let radius = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - radius).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (centre + radius).min(1.0)
    };
    (lo, hi)
}

fn trial_rng(seed: u64, m_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m_index as u64) << 32) | trial as u64);
    rng
}

/// Empirical error rate at each `m`.
pub fn simulate_error_rates(cfg: &SimConfig) -> Result<Vec<ErrorPoint>> {
    cfg.validate()?;
    if cfg.trials > u32::MAX as usize || cfg.m_values.len() > u32::MAX as usize {
        return invalid("trials and the number of m values must fit in 32 bits");
    }
    let decoder = MlDecoder::new(cfg.truth.n_rows(), cfg.truth.n_cols(), &cfg.profile)?;
    // fail fast on a truth outside the candidate space
    decoder.decide(&[], &cfg.truth)?;
    cfg.m_values
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let errors = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, mi, t);
                    let obs = sample_observations(&cfg.truth, &cfg.profile, m, &mut rng);
                    decoder
                        .decide(&obs, &cfg.truth)
                        .map(|d| usize::from(!d.correct))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            Ok(ErrorPoint {
                m,
                trials: cfg.trials,
                errors,
                error_rate: errors as f64 / cfg.trials as f64,
                wilson: wilson_interval(errors, cfg.trials, Z95),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    /// Nats per sample.
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope.
    pub slope_interval: (f64, f64),
    pub used_points: usize,
}

/// Least squares on `(m, -ln rate)` over points with a positive rate.
pub fn fit_exponent(points: &[(usize, f64)]) -> Result<ExponentFit> {
    if let Some(bad) = points.iter().find(|p| !(0.0..=1.0).contains(&p.1)) {
        return invalid(format!(
            "error rate {} at m = {} outside [0, 1]",
            bad.1, bad.0
        ));
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(m, r)| (m as f64, -r.ln()))
        .collect();
    let n = usable.len();
    if n < MIN_FIT_POINTS {
        let rates: Vec<String> = points.iter().map(|(m, r)| format!("m={m}: {r}")).collect();
        return Err(Error::Estimation(format!(
            "{n} of {} points have a positive error rate, need at least {MIN_FIT_POINTS} ({})",
            points.len(),
            rates.join(", ")
        )));
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Estimation("all usable points share one m".into()));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::Estimation(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        slope,
        intercept,
        slope_interval: (slope - t * se, slope + t * se),
        used_points: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentEstimate {
    pub per_m: Vec<ErrorPoint>,
    pub slope: f64,
    pub slope_interval: (f64, f64),
    pub used_points: usize,
}

/// Simulates every `m` and fits the decay rate of the error probability.
pub fn estimate_exponent(cfg: &SimConfig) -> Result<ExponentEstimate> {
    let per_m = simulate_error_rates(cfg)?;
    let pts: Vec<(usize, f64)> = per_m.iter().map(|p| (p.m, p.error_rate)).collect();
    let fit = fit_exponent(&pts)?;
    Ok(ExponentEstimate {
        per_m,
        slope: fit.slope,
        slope_interval: fit.slope_interval,
        used_points: fit.used_points,
    })
}
