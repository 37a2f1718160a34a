//! Identifiability of binary-matrix Bernoulli mixtures.
//!
//! A source matrix `X` (`N` rows, `L` columns) defines a distribution over
//! `{0,1}^L`: pick a row uniformly and pass it through a binary symmetric
//! channel with per-column flip rates. This crate computes the Chernoff
//! information between two such mixtures, the worst case over all matrix
//! pairs (exactly by enumeration, and through closed-form bounds), the
//! column reductions behind those bounds, and a Monte Carlo check of the
//! maximum-likelihood error exponent.
//!
//! Words are `u32` with bit `ℓ` holding column `ℓ`. All logarithms are
//! natural.

pub mod bounds;
pub mod chernoff;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod reductions;
pub mod sim;

pub use bounds::{theorem1_bounds, theorem2_bounds, BoundReport, Regime};
pub use chernoff::{chernoff_info, symmetric_ci, ChernoffResult};
pub use error::{Error, Result};
pub use matrix::{
    delta_reduce, mixture_distribution, BinaryMatrix, FlipProfile, MixtureDistribution,
};
pub use oracle::{closest_pair, enumerate_matrices, ClosestPairResult};
pub use reductions::{full_reduction, MatrixPair, ReductionTrace};
pub use sim::{estimate_exponent, ExponentEstimate, SimConfig};
