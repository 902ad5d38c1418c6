//! Metacognition metrics for binary-discrimination agents.
//!
//! This crate measures two things about an agent that makes repeated binary
//! judgments: how well its confidence ratings separate its correct from its
//! incorrect responses (meta-d' and the efficiency ratio meta-d'/d'), and
//! how its decision criterion sits relative to its sensitivity (c and
//! c' = c/d'). Everything is equal-variance signal detection theory; the
//! meta-d' estimate is a constrained maximum-likelihood fit of an ideal
//! type 2 observer to the observed (stimulus, response, confidence) counts.
//!
//! The pieces:
//!
//! - [`sdt`]: closed-form type 1 metrics (d', c, c') with edge correction.
//! - [`metad`]: the type 2 model, likelihood, and the constrained fit.
//! - [`sim`]: generative observers for expected counts and finite-trial
//!   simulation, used to validate the estimator end to end.
//! - [`bootstrap`]: parametric-bootstrap confidence intervals.
//! - [`stats`]: Delta-method variances, Bonferroni Z-tests, ROPE verdicts.
//! - [`counts`]: the count tensors and their CSV interchange format.
//! - [`report`]: the fit-report JSON interchange format.

// guards written as !(x > 0.0) are deliberate: they reject NaN along with
// the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod counts;
pub mod error;
pub mod math;
pub mod metad;
pub mod optim;
mod rng;
pub mod sdt;
pub mod sim;
pub mod stats;
pub mod report;

pub use bootstrap::{bootstrap_ci, bootstrap_diff_ci, BootStatistic, BootstrapCi, BootstrapOptions};
pub use counts::{CountsData, RatingCounts, StimulusClass, Type1Counts};
pub use error::{Error, Result};
pub use metad::{
    fit_meta_d, log_likelihood, m_ratio, type2_probs, CellPaddingPolicy, FitOptions, FitResult,
    MetaDParams, Type2ProbTable,
};
pub use report::{CiReport, FitReport};
pub use sdt::{
    c_prime, criterion_c, d_prime, type1_rates, EdgeCorrectionPolicy, Type1Stats,
};
pub use sim::{expected_counts, simulate_counts, ObserverSpec, SimOptions};
pub use stats::{
    delta_var_c, delta_var_dprime, rope_classify, z_test, ComparisonResult, DeltaEstimate,
    Interval, Rope, RopeVerdict, ZTest,
};
