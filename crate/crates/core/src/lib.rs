//! Bayesian point and interval estimation of the exponential scale
//! parameter δ from the upper record range `R = X_T(n) - X_T(1)`.
//!
//! The pieces, bottom-up:
//!
//! - [`specfun`]: log-gamma, incomplete gamma, chi-squared quantiles.
//! - [`records`]: record extraction and seeded record samplers.
//! - [`model`]: record-range density, inverted-gamma prior and posterior.
//! - [`estimators`]: ML and Bayes point estimates with analytic moments.
//! - [`intervals`]: equal-tails, exact HPD and closed-form HPM intervals.
//! - [`risk`]: risk and Bayes risk of the linear family `m R + d`.
//! - [`sim`]: seeded Monte Carlo studies.
//! - [`datasets`]: the two worked-example sequences.
//! - [`cli`]: the `rrb` command-line tool.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod estimators;
pub mod intervals;
pub mod model;
pub mod records;
pub mod risk;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
