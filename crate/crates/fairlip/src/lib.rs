//! Provably fair randomized classifiers via linear programming.
//!
//! The crate builds classifiers as stochastic maps from individuals to
//! outcome distributions, constrained so that similar individuals (under a
//! task-specific metric) receive similar distributions. On top of that
//! kernel it provides:
//!
//! - [`fairness`]: loss minimization subject to the Lipschitz constraint,
//!   for total-variation and relative l-infinity probability metrics;
//! - [`parity`]: statistical-parity measurement, the worst-case bias LPs,
//!   and earthmover distances relating the two;
//! - [`affirmative`]: the preferential-treatment pipeline that enforces
//!   parity while relaxing only cross-group constraints;
//! - [`expmech`]: the exponential mechanism with verifiable Lipschitz
//!   constants, ball-counting profiles, and nearest-neighbor extension;
//! - [`lp`]: the deterministic dense simplex solver behind all of it.

pub mod affirmative;
pub mod error;
pub mod expmech;
pub mod fairness;
pub mod lp;
pub mod parity;
pub mod prob;
pub mod space;

pub use error::{Error, Result};
pub use prob::{
    check_lipschitz, dinf_distance, group_mixture, postprocess, tv_distance, LipschitzReport,
    OutcomeDistribution, ProbMetricKind, StochasticMap, LIPSCHITZ_TOL, PROB_TOL,
};
pub use space::{FairnessInstance, GroupDistribution, MetricSpace};
