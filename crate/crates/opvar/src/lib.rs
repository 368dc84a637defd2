//! Poisson–Pareto operational loss models fitted to data reported above a
//! time-varying threshold.
//!
//! Losses below a known reporting level `L(t)` are never recorded; fitting the
//! frequency and severity distributions from the reported events alone
//! requires truncated-data likelihoods. This crate provides:
//!
//! - the truncated model itself: Pareto severities, thinned Poisson
//!   frequencies and piecewise-constant threshold schedules ([`model`]);
//! - synthetic data generation for testing and studies ([`simulate`]);
//! - exact log-likelihoods and analytic scores for event-time and
//!   annual-count data ([`likelihood`]);
//! - maximum likelihood fitting in joint, marginal and deliberately
//!   mis-specified modes, with observed-information covariances ([`mle`]);
//! - random-walk Metropolis–Hastings within Gibbs posterior sampling with
//!   flat bounded priors ([`mcmc`]);
//! - annual-loss quantiles by Monte Carlo and Panjer recursion, including the
//!   full-predictive quantile and the conditional quantile distribution that
//!   carry parameter uncertainty into the 0.999 tail ([`annual_loss`]).
//!
//! A companion guide with worked examples lives in the repository's `book/`
//! directory; the command line interface is provided by the `opvar-cli` crate.

pub mod annual_loss;
pub mod error;
pub mod likelihood;
pub mod mcmc;
pub mod mle;
pub mod model;
mod optim;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    Dataset, IntensityFunction, LossEvent, ModelParams, ObservationWindow, Records,
    ThresholdSchedule, YearLoss,
};
