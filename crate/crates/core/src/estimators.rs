//! Point estimators of δ and their sampling moments.
//!
//! Every range-based estimator here is linear in the record range,
//! `m R + d`; [`linear_coefficients`] exposes `(m, d)` so the risk module and
//! the simulations can share one evaluation path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{PosteriorParams, PriorParams};
use crate::records::RecordSummary;
use crate::specfun::chi2_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    /// Mean of the full observed sample.
    MleSample,
    /// `X_T(n) / n`, the ML estimate from the record values.
    MleRecords,
    /// `R / (n - 1)`, the ML estimate from the record range.
    MleUrr,
    /// Bayes rule under the scaled quadratic loss `(δ̂ - δ)² / δ²`.
    BayesQuadratic,
    /// Posterior mean (squared-error loss).
    BayesSquared,
    /// Posterior median (absolute-error loss).
    BayesAbsolute,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 6] = [
        EstimatorId::MleSample,
        EstimatorId::MleRecords,
        EstimatorId::MleUrr,
        EstimatorId::BayesQuadratic,
        EstimatorId::BayesSquared,
        EstimatorId::BayesAbsolute,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::MleSample => "mle_sample",
            EstimatorId::MleRecords => "mle_records",
            EstimatorId::MleUrr => "mle_urr",
            EstimatorId::BayesQuadratic => "bayes_quadratic",
            EstimatorId::BayesSquared => "bayes_squared",
            EstimatorId::BayesAbsolute => "bayes_absolute",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

/// Closed-form sampling moments of an estimator at a reference δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator_id: EstimatorId,
    pub value: f64,
    pub analytic_mean: Option<f64>,
    pub analytic_variance: Option<f64>,
    pub analytic_mse: Option<f64>,
}

pub fn mle_sample(data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if data.iter().any(|&x| x <= 0.0) {
        return Err(domain("mle_sample", "observations must be positive"));
    }
    Ok(data.iter().sum::<f64>() / data.len() as f64)
}

pub fn mle_records(x_last_record: f64, n: usize) -> Result<f64> {
    if !(x_last_record > 0.0 && x_last_record.is_finite()) {
        return Err(domain(
            "mle_records",
            format!("last record must be > 0, got {x_last_record}"),
        ));
    }
    if n == 0 {
        return Err(domain("mle_records", "n must be >= 1"));
    }
    Ok(x_last_record / n as f64)
}

pub fn mle_urr(range: f64, n: usize) -> Result<f64> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(domain("mle_urr", format!("range must be > 0, got {range}")));
    }
    if n < 2 {
        return Err(domain("mle_urr", format!("n must be >= 2, got {n}")));
    }
    Ok(range / (n - 1) as f64)
}

/// `(R + b) / (a + n)`; coincides with the posterior mode.
pub fn bayes_quadratic(post: &PosteriorParams) -> f64 {
    post.scale() / post.a_plus_n()
}

/// Posterior mean `(R + b) / (a + n - 2)`, defined for `s > 1`.
pub fn bayes_squared(post: &PosteriorParams) -> Result<f64> {
    let denom = post.a_plus_n() - 2.0;
    if denom <= 0.0 {
        return Err(Error::DegeneratePosterior(format!(
            "posterior mean needs a + n > 2, got a + n = {}",
            post.a_plus_n()
        )));
    }
    Ok(post.scale() / denom)
}

/// Posterior median `2(R + b) / χ²_{2s; 0.5}`.
pub fn bayes_absolute(post: &PosteriorParams) -> Result<f64> {
    Ok(2.0 * post.scale() / chi2_quantile(0.5, 2.0 * post.shape())?)
}

/// Coefficients `(m, d)` with estimate `m R + d`, for every range-based
/// estimator. `mle_sample` and `mle_records` are not functions of `R`.
pub fn linear_coefficients(id: EstimatorId, n: usize, prior: &PriorParams) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: n,
        });
    }
    let nf = n as f64;
    let (a, b) = (prior.a, prior.b);
    match id {
        EstimatorId::MleUrr => Ok((1.0 / (nf - 1.0), 0.0)),
        EstimatorId::BayesQuadratic => Ok((1.0 / (a + nf), b / (a + nf))),
        EstimatorId::BayesSquared => {
            let denom = a + nf - 2.0;
            if denom <= 0.0 {
                return Err(Error::DegeneratePosterior(format!(
                    "posterior mean needs a + n > 2, got a + n = {}",
                    a + nf
                )));
            }
            Ok((1.0 / denom, b / denom))
        }
        EstimatorId::BayesAbsolute => {
            let q = chi2_quantile(0.5, 2.0 * (a + nf - 1.0))?;
            Ok((2.0 / q, 2.0 * b / q))
        }
        EstimatorId::MleSample | EstimatorId::MleRecords => Err(Error::UnsupportedEstimator(
            format!("{id} is not a linear function of the record range"),
        )),
    }
}

/// Mean, variance and MSE of an estimator when the true scale is
/// `delta_ref`, using `R ~ Gamma(n - 1, δ)` and `X_T(n) ~ Gamma(n, δ)`.
pub fn analytic_moments(
    id: EstimatorId,
    delta_ref: f64,
    n: usize,
    prior: &PriorParams,
) -> Result<Moments> {
    if !(delta_ref > 0.0 && delta_ref.is_finite()) {
        return Err(domain(
            "analytic_moments",
            format!("delta_ref must be > 0, got {delta_ref}"),
        ));
    }
    if n < 2 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: n,
        });
    }
    let nf = n as f64;
    let (mean, variance) = match id {
        EstimatorId::MleSample => {
            return Err(Error::UnsupportedEstimator(
                "sampling moments of the full-sample mean depend on the record times".into(),
            ))
        }
        EstimatorId::MleRecords => (delta_ref, delta_ref * delta_ref / nf),
        _ => {
            let (m, d) = linear_coefficients(id, n, prior)?;
            let k = nf - 1.0;
            (m * k * delta_ref + d, m * m * k * delta_ref * delta_ref)
        }
    };
    let bias = mean - delta_ref;
    Ok(Moments {
        mean,
        variance,
        mse: variance + bias * bias,
    })
}

/// Evaluates one estimator on a record summary.
///
/// `data` is the full observed sample, needed only by `mle_sample`.
/// Analytic moments are attached when `delta_ref` is given and available.
pub fn estimate(
    id: EstimatorId,
    summary: &RecordSummary,
    prior: &PriorParams,
    data: Option<&[f64]>,
    delta_ref: Option<f64>,
) -> Result<EstimateReport> {
    let n = summary.n();
    let value = match id {
        EstimatorId::MleSample => mle_sample(
            data.ok_or_else(|| Error::Config("mle_sample needs the raw sample".into()))?,
        )?,
        EstimatorId::MleRecords => {
            let last = summary.last_value().ok_or(Error::EmptyInput)?;
            mle_records(last, n)?
        }
        _ => {
            let post = crate::model::posterior_from(prior, summary)?;
            match id {
                EstimatorId::MleUrr => mle_urr(summary.range().unwrap_or(0.0), n)?,
                EstimatorId::BayesQuadratic => bayes_quadratic(&post),
                EstimatorId::BayesSquared => bayes_squared(&post)?,
                EstimatorId::BayesAbsolute => bayes_absolute(&post)?,
                EstimatorId::MleSample | EstimatorId::MleRecords => unreachable!(),
            }
        }
    };
    let moments = match delta_ref {
        Some(d) if n >= 2 => match analytic_moments(id, d, n, prior) {
            Ok(m) => Some(m),
            Err(Error::UnsupportedEstimator(_)) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    Ok(EstimateReport {
        estimator_id: id,
        value,
        analytic_mean: moments.map(|m| m.mean),
        analytic_variance: moments.map(|m| m.variance),
        analytic_mse: moments.map(|m| m.mse),
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::model::{posterior_coverage, posterior_mode};
    use proptest::prelude::*;

    fn prior(a: f64, b: f64) -> PriorParams {
        PriorParams::new(a, b).unwrap()
    }

    fn post(a: f64, b: f64, n: usize, range: f64) -> PosteriorParams {
        PosteriorParams::from_parts(&prior(a, b), n, range).unwrap()
    }

    #[test]
    fn mle_sample_means() {
        assert_eq!(mle_sample(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(mle_sample(&[1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mle_sample(&[]), Err(Error::EmptyInput));
        assert!(mle_sample(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn mle_records_values() {
        assert!((mle_records(4.38197283, 2).unwrap() - 2.19098642).abs() < 1e-8);
        assert!((mle_records(9.51953091, 6).unwrap() - 1.58658848).abs() < 1e-8);
        assert_eq!(mle_records(3.5, 1).unwrap(), 3.5);
        assert!(mle_records(0.0, 1).is_err());
        assert!(mle_records(1.0, 0).is_err());
    }

    #[test]
    fn mle_urr_values() {
        assert_eq!(mle_urr(4.319232, 2).unwrap(), 4.319232);
        assert!((mle_urr(5.583854, 3).unwrap() - 2.791927).abs() < 5e-7);
        assert!((mle_urr(9.456790, 6).unwrap() - 1.891358).abs() < 5e-7);
        assert!(mle_urr(1.0, 1).is_err());
        assert!(mle_urr(0.0, 3).is_err());
    }

    #[test]
    fn bayes_quadratic_values() {
        assert!((bayes_quadratic(&post(3.0, 5.0, 2, 4.319232)) - 1.863846).abs() < 5e-7);
        assert!((bayes_quadratic(&post(3.0, 5.0, 4, 7.203468)) - 1.743353).abs() < 5e-7);
        assert!((bayes_quadratic(&post(3.0, 5.0, 6, 9.456790)) - 1.606310).abs() < 5e-7);
        let p = post(3.0, 5.0, 4, 7.203468);
        assert_eq!(bayes_quadratic(&p), posterior_mode(&p));
    }

    #[test]
    fn bayes_squared_values() {
        assert!((bayes_squared(&post(3.0, 5.0, 2, 4.319232)).unwrap() - 3.106411).abs() < 5e-7);
        assert!((bayes_squared(&post(3.0, 5.0, 6, 9.456790)).unwrap() - 2.065256).abs() < 5e-7);
        // a = 1, b = 0 reduces to the range MLE
        for n in 2..8 {
            let r = 3.7;
            let v = bayes_squared(&post(1.0, 0.0, n, r)).unwrap();
            assert!((v - mle_urr(r, n).unwrap()).abs() < 1e-15);
        }
        let degenerate = PosteriorParams::new(1.0, 2.0).unwrap();
        assert!(matches!(
            bayes_squared(&degenerate),
            Err(Error::DegeneratePosterior(_))
        ));
    }

    #[test]
    fn bayes_absolute_is_posterior_median() {
        let p = PosteriorParams::new(4.0, 9.319232).unwrap();
        let med = bayes_absolute(&p).unwrap();
        assert!((posterior_coverage(0.0, med, &p).unwrap() - 0.5).abs() < 1e-9);
        // 2A / χ²_{8; 0.5} with the quantile from mpmath
        assert!((med - 2.0 * 9.319232 / 7.34412149770179220789469214741).abs() < 1e-12);
        assert!((med - 2.53787522521687101962902248516).abs() < 1e-12);
    }

    #[test]
    fn coefficient_identity() {
        let pr = prior(3.0, 5.0);
        for n in 2..9 {
            let range = 1.234 * n as f64;
            let p = PosteriorParams::from_parts(&pr, n, range).unwrap();
            let (m1, d1) = linear_coefficients(EstimatorId::BayesQuadratic, n, &pr).unwrap();
            let (m2, d2) = linear_coefficients(EstimatorId::BayesSquared, n, &pr).unwrap();
            let (m3, d3) = linear_coefficients(EstimatorId::BayesAbsolute, n, &pr).unwrap();
            assert!((m1 * range + d1 - bayes_quadratic(&p)).abs() < 1e-14);
            assert!((m2 * range + d2 - bayes_squared(&p).unwrap()).abs() < 1e-14);
            assert!((m3 * range + d3 - bayes_absolute(&p).unwrap()).abs() < 1e-13);
        }
        assert!(matches!(
            linear_coefficients(EstimatorId::MleRecords, 3, &pr),
            Err(Error::UnsupportedEstimator(_))
        ));
    }

    #[test]
    fn moments_closed_forms() {
        let pr = prior(3.0, 5.0);
        let m = analytic_moments(EstimatorId::BayesQuadratic, 2.0, 4, &pr).unwrap();
        assert!((m.mean - 11.0 / 7.0).abs() < 1e-15);
        assert!((m.variance - 12.0 / 49.0).abs() < 1e-15);
        assert!((m.mse - (12.0 / 49.0 + (11.0 / 7.0 - 2.0f64).powi(2))).abs() < 1e-15);

        let m = analytic_moments(EstimatorId::BayesSquared, 2.0, 4, &pr).unwrap();
        assert!((m.mean - 11.0 / 5.0).abs() < 1e-15);
        assert!((m.variance - 12.0 / 25.0).abs() < 1e-15);

        let m = analytic_moments(EstimatorId::MleRecords, 2.0, 4, &pr).unwrap();
        assert_eq!((m.mean, m.variance), (2.0, 1.0));

        assert!(matches!(
            analytic_moments(EstimatorId::MleSample, 2.0, 4, &pr),
            Err(Error::UnsupportedEstimator(_))
        ));
        assert!(analytic_moments(EstimatorId::MleUrr, 0.0, 4, &pr).is_err());
    }

    #[test]
    fn unbiased_cases() {
        let pr = prior(1.0, 0.0);
        for n in 2..20 {
            let m = analytic_moments(EstimatorId::BayesSquared, 3.0, n, &pr).unwrap();
            assert!((m.mean - 3.0).abs() < 1e-14);
        }
        // b = 0 quadratic rule: bias shrinks like (a + 1)/(a + n)
        let a = 3.0;
        let pr = prior(a, 0.0);
        for n in [2usize, 10, 100, 10_000] {
            let m = analytic_moments(EstimatorId::BayesQuadratic, 2.0, n, &pr).unwrap();
            assert!((m.mean - 2.0).abs() <= 2.0 * (a + 1.0) / (a + n as f64) + 1e-15);
        }
    }

    #[test]
    fn ids_round_trip_through_strings() {
        for id in EstimatorId::ALL {
            assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
        }
        assert!("bogus".parse::<EstimatorId>().is_err());
    }

    #[test]
    fn estimate_report_fields() {
        let summary = crate::records::extract_upper_records(&[1.0, 0.5, 3.0, 2.0, 4.0]).unwrap();
        let pr = prior(3.0, 5.0);
        let r = estimate(EstimatorId::BayesQuadratic, &summary, &pr, None, None).unwrap();
        assert!((r.value - 8.0 / 6.0).abs() < 1e-15);
        assert!(r.analytic_mean.is_none());
        let r = estimate(EstimatorId::MleUrr, &summary, &pr, None, Some(1.0)).unwrap();
        assert_eq!(r.value, 1.5);
        assert_eq!(r.analytic_mean, Some(1.0));
        let r = estimate(
            EstimatorId::MleSample,
            &summary,
            &pr,
            Some(&[1.0, 3.0]),
            Some(1.0),
        )
        .unwrap();
        assert_eq!(r.value, 2.0);
        assert!(r.analytic_mse.is_none());
        assert!(estimate(EstimatorId::MleSample, &summary, &pr, None, None).is_err());
    }

    proptest! {
        #[test]
        fn mode_median_mean_ordering(s in 2.0001f64..200.0, a in 0.01f64..1000.0) {
            let p = PosteriorParams::new(s, a).unwrap();
            let mode = bayes_quadratic(&p);
            let median = bayes_absolute(&p).unwrap();
            let mean = bayes_squared(&p).unwrap();
            prop_assert!(mode < median && median < mean);
        }

        #[test]
        fn quadratic_and_squared_share_numerator(a in 0.5f64..20.0, b in 0.0f64..20.0, n in 2usize..50, r in 0.01f64..50.0) {
            let p = PosteriorParams::from_parts(&PriorParams::new(a, b).unwrap(), n, r).unwrap();
            prop_assume!(p.a_plus_n() > 2.0);
            let lhs = bayes_quadratic(&p) * (a + n as f64);
            let rhs = bayes_squared(&p).unwrap() * (a + n as f64 - 2.0);
            prop_assert!((lhs - p.scale()).abs() <= 1e-12 * p.scale());
            prop_assert!((rhs - p.scale()).abs() <= 1e-12 * p.scale());
        }

        #[test]
        fn mle_urr_scale_equivariant(r in 0.001f64..100.0, c in 0.001f64..100.0, n in 2usize..100) {
            let lhs = mle_urr(c * r, n).unwrap();
            let rhs = c * mle_urr(r, n).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}
