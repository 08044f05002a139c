//! Inference for the inverted exponentiated Pareto (IEP) lifetime model under
//! block adaptive progressive Type-II censoring.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: IEP distribution functions, order statistics and the
//!   competitor lifetime models used for model comparison.
//! * [`censoring`]: censoring plans, block designs and the sequential sampler.
//! * [`mle`]: log-likelihood, profile-score root solve and plug-in estimates.
//! * [`asymptotic`]: observed information, delta method and normal intervals.
//! * [`pivotal`]: chi-square pivots and generalized confidence intervals.
//! * [`gof`]: complete-data fitting, Kolmogorov-Smirnov tests, information
//!   criteria and plot data.
//! * [`harness`]: the replicated simulation study and its CSV tables.

// Guards written as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod censoring;
pub mod distributions;
mod error;
pub mod gof;
pub mod harness;
pub mod mle;
mod numeric;
pub mod optim;
pub mod pivotal;
pub mod rng;

pub use error::{Error, Result};
