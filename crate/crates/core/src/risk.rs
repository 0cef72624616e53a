//! Risk of the linear estimators `m R + d` and the limit check behind the
//! admissibility of `R/n + 1/n`.
//!
//! With `R ~ Gamma(n-1, δ)` the scaled quadratic risk is
//!
//! ```text
//! R(mR+d, δ) = (m(n-1) - 1)² + m²(n-1) + 2d(m(n-1) - 1)/δ + d²/δ²
//! ```
//!
//! and averaging over the inverted-gamma prior replaces `1/δ` and `1/δ²` by
//! `a/b` and `a(a+1)/b²`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimators::{linear_coefficients, EstimatorId};
use crate::model::PriorParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEstimator {
    pub m: f64,
    pub d: f64,
}

impl LinearEstimator {
    pub fn new(m: f64, d: f64) -> Self {
        Self { m, d }
    }

    /// The `(m, d)` form of a range-based point estimator.
    pub fn from_estimator(id: EstimatorId, n: usize, prior: &PriorParams) -> Result<Self> {
        let (m, d) = linear_coefficients(id, n, prior)?;
        Ok(Self { m, d })
    }

    pub fn apply(&self, range: f64) -> f64 {
        self.m * range + self.d
    }
}

/// Loss weighting: `(δ̂-δ)²/δ²` or plain `(δ̂-δ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossWeight {
    #[default]
    Scaled,
    Unscaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    /// `0 <= m < 1/n`, `d > 0`.
    AdmissibleInterior,
    /// `m = 1/n`, `d > 0`.
    AdmissibleBoundary,
    /// Not covered by either sufficient condition. This is not a claim of
    /// inadmissibility.
    OutsideTheorem,
}

impl Admissibility {
    pub fn as_str(&self) -> &'static str {
        match self {
            Admissibility::AdmissibleInterior => "admissible_interior",
            Admissibility::AdmissibleBoundary => "admissible_boundary",
            Admissibility::OutsideTheorem => "outside_theorem",
        }
    }
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_n(routine: &'static str, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(domain(routine, format!("n must be >= 2, got {n}")));
    }
    Ok(n as f64)
}

fn check_est(routine: &'static str, est: &LinearEstimator) -> Result<()> {
    if !est.m.is_finite() || !est.d.is_finite() {
        return Err(domain(routine, "m and d must be finite"));
    }
    Ok(())
}

/// The δ-free part `(m(n-1) - 1)² + m²(n-1)`.
fn base_term(m: f64, nf: f64) -> f64 {
    let k = nf - 1.0;
    (m * k - 1.0).powi(2) + m * m * k
}

/// Frequentist risk under the scaled quadratic loss.
pub fn risk_linear(est: &LinearEstimator, delta: f64, n: usize) -> Result<f64> {
    risk_linear_weighted(est, delta, n, LossWeight::Scaled)
}

pub fn risk_linear_weighted(
    est: &LinearEstimator,
    delta: f64,
    n: usize,
    weight: LossWeight,
) -> Result<f64> {
    check_est("risk_linear", est)?;
    let nf = check_n("risk_linear", n)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(
            "risk_linear",
            format!("delta must be finite and > 0, got {delta}"),
        ));
    }
    let LinearEstimator { m, d } = *est;
    let lin = m * (nf - 1.0) - 1.0;
    let scaled = base_term(m, nf) + 2.0 * d * lin / delta + d * d / (delta * delta);
    Ok(match weight {
        LossWeight::Scaled => scaled,
        LossWeight::Unscaled => scaled * delta * delta,
    })
}

/// Bayes risk (prior expectation of [`risk_linear`]).
pub fn bayes_risk_linear(est: &LinearEstimator, n: usize, prior: &PriorParams) -> Result<f64> {
    bayes_risk_linear_weighted(est, n, prior, LossWeight::Scaled)
}

/// Under [`LossWeight::Unscaled`] the prior moments `E[δ] = b/(a-1)` and
/// `E[δ²] = b²/((a-1)(a-2))` are needed, so `a > 2` is required.
pub fn bayes_risk_linear_weighted(
    est: &LinearEstimator,
    n: usize,
    prior: &PriorParams,
    weight: LossWeight,
) -> Result<f64> {
    check_est("bayes_risk_linear", est)?;
    let nf = check_n("bayes_risk_linear", n)?;
    let LinearEstimator { m, d } = *est;
    let (a, b) = (prior.a, prior.b);
    let lin = m * (nf - 1.0) - 1.0;
    match weight {
        LossWeight::Scaled => {
            if b == 0.0 {
                if d == 0.0 {
                    return Ok(base_term(m, nf));
                }
                return Err(domain("bayes_risk_linear", "b = 0 leaves E[1/δ] infinite"));
            }
            Ok(base_term(m, nf) + 2.0 * d * a * lin / b + d * d * a * (a + 1.0) / (b * b))
        }
        LossWeight::Unscaled => {
            if a <= 2.0 {
                return Err(domain(
                    "bayes_risk_linear",
                    format!("unscaled Bayes risk needs a > 2, got {a}"),
                ));
            }
            let e1 = b / (a - 1.0);
            let e2 = b * b / ((a - 1.0) * (a - 2.0));
            Ok(base_term(m, nf) * e2 + 2.0 * d * lin * e1 + d * d)
        }
    }
}

fn check_gap_args(routine: &'static str, k: f64, n: usize, b: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(domain(
            routine,
            format!("k must be finite and > 0, got {k}"),
        ));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain(
            routine,
            format!("b must be finite and > 0, got {b}"),
        ));
    }
    check_n(routine, n)
}

/// Bayes risk of `kR/(1+kn) + kb/(1+kn)` under the prior with `a = 1/k`,
/// written out term by term.
pub fn r1(k: f64, n: usize, b: f64) -> Result<f64> {
    let nf = check_gap_args("r1", k, n, b)?;
    let m = k / (1.0 + k * nf);
    let d = k * b / (1.0 + k * nf);
    let lin = m * (nf - 1.0) - 1.0;
    Ok(base_term(m, nf) + 2.0 * d * lin / (k * b) + (k + 1.0) / (k * k) * (d * d) / (b * b))
}

/// Bayes risk of `R/n + 1/n` under the prior with `a = 1/k`.
pub fn r2(k: f64, n: usize, b: f64) -> Result<f64> {
    let nf = check_gap_args("r2", k, n, b)?;
    Ok(1.0 / nf - 2.0 / (b * nf * nf * k) + (k + 1.0) / (nf * nf * k * k * b * b))
}

/// `r1(k) - r2(k)`, which vanishes as `k -> inf`.
pub fn r1_r2_gap(k: f64, n: usize, b: f64) -> Result<f64> {
    Ok(r1(k, n, b)? - r2(k, n, b)?)
}

/// Which admissibility condition, if any, covers `m R + d`.
pub fn classify_admissible(est: &LinearEstimator, n: usize) -> Admissibility {
    if n == 0 || !est.m.is_finite() || !est.d.is_finite() || est.d <= 0.0 {
        return Admissibility::OutsideTheorem;
    }
    let boundary = 1.0 / n as f64;
    // n·m == 1 absorbs the rounding in 1/n
    if (est.m * n as f64 - 1.0).abs() <= 4.0 * f64::EPSILON {
        Admissibility::AdmissibleBoundary
    } else if est.m >= 0.0 && est.m < boundary {
        Admissibility::AdmissibleInterior
    } else {
        Admissibility::OutsideTheorem
    }
}
