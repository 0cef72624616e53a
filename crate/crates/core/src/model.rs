//! Record-range density, the inverted-gamma prior and the resulting
//! posterior for δ.
//!
//! With `n` records and record range `r`, the posterior is inverted gamma with
//! shape `s = a + n - 1` and scale `A = b + r`:
//!
//! ```text
//! π(δ | r) = A^s exp(-A/δ) / (Γ(s) δ^(a+n))
//! ```
//!
//! so `A/δ` is standard gamma with shape `s` and `2A/δ` is χ² with `2s`
//! degrees of freedom.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::records::RecordSummary;
use crate::specfun::{ln_gamma, reg_gamma_between, reg_upper_gamma};

/// Inverted-gamma prior `g(δ) = b^a exp(-b/δ) / (Γ(a) δ^(a+1))`.
///
/// `b = 0` is accepted as the improper limit used for the unbiased
/// posterior-mean case; the posterior stays proper as long as the observed
/// range is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    pub a: f64,
    pub b: f64,
}

impl PriorParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(
                "PriorParams",
                format!("a must be finite and > 0, got {a}"),
            ));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(domain(
                "PriorParams",
                format!("b must be finite and >= 0, got {b}"),
            ));
        }
        Ok(Self { a, b })
    }

    /// `E[1/δ]` under the prior.
    pub fn mean_inverse(&self) -> f64 {
        self.a / self.b
    }

    /// `E[1/δ²]` under the prior.
    pub fn mean_inverse_sq(&self) -> f64 {
        self.a * (self.a + 1.0) / (self.b * self.b)
    }
}

/// Posterior shape `s = a + n - 1`, scale `A = b + range` and the kernel
/// exponent `a + n`, kept separately from `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    shape: f64,
    scale: f64,
    a_plus_n: f64,
}

impl PosteriorParams {
    /// Posterior with the given shape and scale; the kernel exponent is
    /// `shape + 1`.
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(domain(
                "PosteriorParams",
                format!("shape must be finite and > 0, got {shape}"),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegeneratePosterior(format!(
                "scale must be finite and > 0, got {scale}"
            )));
        }
        Ok(Self {
            shape,
            scale,
            a_plus_n: shape + 1.0,
        })
    }

    /// Posterior for prior `prior` after `n` records with range `range`.
    pub fn from_parts(prior: &PriorParams, n: usize, range: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientRecords {
                needed: 2,
                found: n,
            });
        }
        if !(range >= 0.0 && range.is_finite()) {
            return Err(domain(
                "posterior_from",
                format!("range must be finite and >= 0, got {range}"),
            ));
        }
        let scale = prior.b + range;
        if scale <= 0.0 {
            return Err(Error::DegeneratePosterior(
                "b + range is zero; the posterior is improper".into(),
            ));
        }
        Ok(Self {
            shape: prior.a + n as f64 - 1.0,
            scale,
            a_plus_n: prior.a + n as f64,
        })
    }

    /// `s = a + n - 1`.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// `A = b + range`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `a + n`, the exponent of δ in the posterior kernel.
    pub fn a_plus_n(&self) -> f64 {
        self.a_plus_n
    }

    /// The same posterior with its scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(domain(
                "PosteriorParams::rescaled",
                format!("factor must be > 0, got {factor}"),
            ));
        }
        Ok(Self {
            scale: self.scale * factor,
            ..*self
        })
    }
}

/// Density of the record range `R = X_T(n) - X_T(1)`:
/// `r^(n-2) e^(-r/δ) / ((n-2)! δ^(n-1))`, i.e. Gamma(n-1, δ).
pub fn range_pdf(r: f64, n: usize, delta: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain(
            "range_pdf",
            format!("r must be finite and >= 0, got {r}"),
        ));
    }
    if n < 2 {
        return Err(domain("range_pdf", format!("n must be >= 2, got {n}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(
            "range_pdf",
            format!("delta must be finite and > 0, got {delta}"),
        ));
    }
    let k = (n - 2) as f64;
    if r == 0.0 {
        return Ok(if n == 2 { 1.0 / delta } else { 0.0 });
    }
    let ln = k * r.ln() - r / delta - ln_gamma(k + 1.0)? - (k + 1.0) * delta.ln();
    Ok(ln.exp())
}

/// Posterior from a prior and an extracted record summary (`n >= 2`).
pub fn posterior_from(prior: &PriorParams, summary: &RecordSummary) -> Result<PosteriorParams> {
    let range = summary.range().ok_or(Error::InsufficientRecords {
        needed: 2,
        found: summary.n(),
    })?;
    PosteriorParams::from_parts(prior, summary.n(), range)
}

fn check_delta(routine: &'static str, delta: f64) -> Result<()> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(domain(routine, format!("delta must be > 0, got {delta}")));
    }
    Ok(())
}

/// Log posterior density.
pub fn posterior_ln_pdf(delta: f64, post: &PosteriorParams) -> Result<f64> {
    check_delta("posterior_pdf", delta)?;
    if delta == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = post.shape;
    let a = post.scale;
    Ok(s * a.ln() - a / delta - ln_gamma(s)? - post.a_plus_n * delta.ln())
}

/// Posterior density `A^s exp(-A/δ) / (Γ(s) δ^(a+n))`.
pub fn posterior_pdf(delta: f64, post: &PosteriorParams) -> Result<f64> {
    Ok(posterior_ln_pdf(delta, post)?.exp())
}

/// Posterior CDF `P(δ' <= delta | data) = Q(s, A/delta)`.
pub fn posterior_cdf(delta: f64, post: &PosteriorParams) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(domain(
            "posterior_cdf",
            format!("delta must be >= 0, got {delta}"),
        ));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    reg_upper_gamma(post.shape, post.scale / delta)
}

/// Posterior probability of `c_lo <= δ <= c_hi`; `c_lo` may be zero and
/// `c_hi` may be `+inf`.
pub fn posterior_coverage(c_lo: f64, c_hi: f64, post: &PosteriorParams) -> Result<f64> {
    if c_lo.is_nan() || c_hi.is_nan() || c_lo < 0.0 {
        return Err(domain(
            "posterior_coverage",
            format!("endpoints must be >= 0, got ({c_lo}, {c_hi})"),
        ));
    }
    if c_lo > c_hi {
        return Err(Error::Ordering {
            lower: c_lo,
            upper: c_hi,
        });
    }
    if c_lo == c_hi {
        return Ok(0.0);
    }
    let x_lo = post.scale / c_hi;
    let x_hi = if c_lo == 0.0 {
        f64::INFINITY
    } else {
        post.scale / c_lo
    };
    reg_gamma_between(post.shape, x_lo, x_hi)
}

/// Posterior mode `A / (a + n)`.
pub fn posterior_mode(post: &PosteriorParams) -> f64 {
    post.scale / post.a_plus_n
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(s: f64, a: f64) -> PosteriorParams {
        PosteriorParams::new(s, a).unwrap()
    }

    #[test]
    fn prior_validation() {
        assert!(PriorParams::new(0.0, 1.0).is_err());
        assert!(PriorParams::new(1.0, -1.0).is_err());
        assert!(PriorParams::new(1.0, f64::NAN).is_err());
        assert!(PriorParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn range_pdf_exponential_case() {
        assert!((range_pdf(0.0, 2, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(range_pdf(0.0, 3, 2.0).unwrap(), 0.0);
        assert!(range_pdf(-1.0, 3, 1.0).is_err());
        assert!(range_pdf(1.0, 1, 1.0).is_err());
        assert!(range_pdf(1.0, 3, 0.0).is_err());
    }

    #[test]
    fn range_pdf_reference_value() {
        // 4^3 e^-2 / (3! 2^4), evaluated in mpmath
        let got = range_pdf(4.0, 5, 2.0).unwrap();
        assert!((got - 0.090223522157741794595999663315).abs() < 1e-15);
    }

    #[test]
    fn posterior_from_example_one() {
        let prior = PriorParams::new(3.0, 5.0).unwrap();
        let summary = RecordSummary {
            values: vec![0.06274109, 4.38197283],
            times: vec![1, 2],
            synthetic_times: false,
        };
        let p = posterior_from(&prior, &summary).unwrap();
        assert_eq!(p.shape(), 4.0);
        assert!((p.scale() - 9.31923174).abs() < 1e-12);
        assert_eq!(p.a_plus_n(), 5.0);

        let p6 = PosteriorParams::from_parts(&prior, 6, 9.456790).unwrap();
        assert_eq!(p6.shape(), 8.0);
        assert!((p6.scale() - 14.456790).abs() < 1e-12);

        let p2 =
            PosteriorParams::from_parts(&PriorParams::new(3.0, 4.0).unwrap(), 2, 2.013778).unwrap();
        assert_eq!(p2.shape(), 4.0);
        assert!((p2.scale() - 6.013778).abs() < 1e-12);
    }

    #[test]
    fn posterior_from_needs_two_records() {
        let prior = PriorParams::new(3.0, 5.0).unwrap();
        let one = RecordSummary {
            values: vec![1.0],
            times: vec![1],
            synthetic_times: false,
        };
        assert!(matches!(
            posterior_from(&prior, &one),
            Err(Error::InsufficientRecords {
                needed: 2,
                found: 1
            })
        ));
        let improper = PriorParams::new(1.0, 0.0).unwrap();
        assert!(matches!(
            PosteriorParams::from_parts(&improper, 3, 0.0),
            Err(Error::DegeneratePosterior(_))
        ));
    }

    #[test]
    fn posterior_pdf_limits_and_value() {
        let p = post(4.0, 9.319232);
        assert_eq!(posterior_pdf(1e-6, &p).unwrap(), 0.0);
        assert!(posterior_pdf(0.0, &p).is_err());
        // mpmath reference
        let v = posterior_pdf(2.0, &p).unwrap();
        assert!((v - 0.372026390674064794686752659061).abs() < 1e-14);
    }

    #[test]
    fn posterior_pdf_peaks_at_mode() {
        let p = post(4.0, 9.319232);
        let mode = posterior_mode(&p);
        let h = 1e-4;
        let (best, _) = (1..100_000)
            .map(|i| i as f64 * h)
            .map(|d| (d, posterior_pdf(d, &p).unwrap()))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best - mode).abs() <= h);
    }

    #[test]
    fn mode_values() {
        assert!((posterior_mode(&post(4.0, 9.319232)) - 1.8638464).abs() < 1e-12);
        assert_eq!(posterior_mode(&post(1.0, 1.0)), 0.5);
        let p =
            PosteriorParams::from_parts(&PriorParams::new(3.0, 5.0).unwrap(), 6, 9.456790).unwrap();
        assert!((posterior_mode(&p) - 1.6063100).abs() < 1e-7);
    }

    #[test]
    fn coverage_limits() {
        let p = post(4.0, 9.319232);
        assert_eq!(posterior_coverage(2.0, 2.0, &p).unwrap(), 0.0);
        assert!((posterior_coverage(0.0, f64::INFINITY, &p).unwrap() - 1.0).abs() < 1e-10);
        assert!((posterior_coverage(1e-300, 1e300, &p).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(
            posterior_coverage(3.0, 2.0, &p),
            Err(Error::Ordering { .. })
        ));
        // mpmath quadrature of the density over [1, 5]
        let c = posterior_coverage(1.0, 5.0, &p).unwrap();
        assert!((c - 0.863901052656647172629694937648).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_coverage() {
        let p = post(3.5, 2.0);
        for d in [0.1, 0.5, 1.0, 4.0] {
            let c = posterior_cdf(d, &p).unwrap();
            assert!((c - posterior_coverage(0.0, d, &p).unwrap()).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn range_pdf_is_gamma_density(r in 0.001f64..50.0, n in 2usize..40, delta in 0.05f64..20.0) {
            let k = (n - 1) as f64;
            // Gamma(k, δ) density, built from the factorial directly
            let fact: f64 = (1..n - 1).map(|i| (i as f64).ln()).sum();
            let want = ((k - 1.0) * r.ln() - r / delta - fact - k * delta.ln()).exp();
            let got = range_pdf(r, n, delta).unwrap();
            prop_assert!(((got - want) / want).abs() < 1e-10 || want < 1e-300);
        }

        #[test]
        fn coverage_monotone_in_endpoints(lo in 0.01f64..3.0, w in 0.0f64..5.0, dl in 0.0f64..0.01, dh in 0.0f64..2.0) {
            let p = post(4.0, 9.319232);
            let base = posterior_coverage(lo, lo + w, &p).unwrap();
            let wider = posterior_coverage(lo - dl, lo + w + dh, &p).unwrap();
            prop_assert!(wider >= base);
        }

        #[test]
        fn chi_squared_link(s in 0.5f64..20.0, a in 0.1f64..60.0, p_lo in 0.01f64..0.45, p_hi in 0.55f64..0.99) {
            use crate::specfun::chi2_quantile;
            let post = post(s, a);
            let q_lo = chi2_quantile(p_lo, 2.0 * s).unwrap();
            let q_hi = chi2_quantile(p_hi, 2.0 * s).unwrap();
            let c = posterior_coverage(2.0 * a / q_hi, 2.0 * a / q_lo, &post).unwrap();
            prop_assert!((c - (p_hi - p_lo)).abs() < 1e-9);
        }
    }
}
