//! Credible intervals for δ: equal tails, exact HPD and the closed-form
//! homotopy-perturbation (HPM) approximation.
//!
//! The exact HPD interval `(c_L, c_U)` solves
//!
//! ```text
//! P(c_L <= δ <= c_U | data) = 1 - α
//! (c_L / c_U)^(a+n) = exp(A (1/c_U - 1/c_L))      (equal density)
//! ```
//!
//! Writing `h(c) = (a+n) ln c + A/c` for the negative log kernel, the second
//! equation is `h(c_L) = h(c_U)`. As a function of `ln c`, `h` is convex with
//! its minimum at the mode `A/(a+n)`, so for each `c_L` below the mode there
//! is exactly one partner `c_U` above it, and coverage falls monotonically as
//! `c_L` rises to the mode.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{
    posterior_coverage, posterior_ln_pdf, posterior_mode, posterior_pdf, PosteriorParams,
};
use crate::specfun::chi2_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    EqualTails,
    HpdExact,
    HpdHpm,
}

impl IntervalKind {
    pub const ALL: [IntervalKind; 3] = [
        IntervalKind::EqualTails,
        IntervalKind::HpdExact,
        IntervalKind::HpdHpm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalKind::EqualTails => "equal_tails",
            IntervalKind::HpdExact => "hpd_exact",
            IntervalKind::HpdHpm => "hpd_hpm",
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntervalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntervalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown interval kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalDiagnostics {
    /// `|π(lower) - π(upper)| / π(mode)`.
    pub equal_density_residual: f64,
    /// `|coverage(lower, upper) - level|`.
    pub coverage_residual: f64,
    pub iterations: usize,
    /// Posterior mode, for judging where the interval sits.
    pub mode: f64,
    /// Width parameter of the HPM closed form, when used.
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub kind: IntervalKind,
    pub length: f64,
    pub diagnostics: IntervalDiagnostics,
}

impl CredibleInterval {
    pub fn contains(&self, delta: f64) -> bool {
        self.lower <= delta && delta <= self.upper
    }
}

fn check_alpha(routine: &'static str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(
            routine,
            format!("alpha must lie in (0, 1), got {alpha}"),
        ));
    }
    Ok(())
}

fn density_residual(lower: f64, upper: f64, post: &PosteriorParams) -> Result<f64> {
    let peak = posterior_ln_pdf(posterior_mode(post), post)?;
    let lo = (posterior_ln_pdf(lower, post)? - peak).exp();
    let hi = (posterior_ln_pdf(upper, post)? - peak).exp();
    Ok((lo - hi).abs())
}

fn build(
    lower: f64,
    upper: f64,
    level: f64,
    kind: IntervalKind,
    iterations: usize,
    g: Option<f64>,
    post: &PosteriorParams,
) -> Result<CredibleInterval> {
    let coverage = posterior_coverage(lower, upper, post)?;
    Ok(CredibleInterval {
        lower,
        upper,
        level,
        kind,
        length: upper - lower,
        diagnostics: IntervalDiagnostics {
            equal_density_residual: density_residual(lower, upper, post)?,
            coverage_residual: (coverage - level).abs(),
            iterations,
            mode: posterior_mode(post),
            g,
        },
    })
}

/// Equal-tails interval: posterior mass `α/2` below and above, from
/// `2A/δ ~ χ²_{2s}`.
pub fn equal_tails(post: &PosteriorParams, alpha: f64) -> Result<CredibleInterval> {
    check_alpha("equal_tails", alpha)?;
    let nu = 2.0 * post.shape();
    let two_a = 2.0 * post.scale();
    let lower = two_a / chi2_quantile(1.0 - alpha / 2.0, nu)?;
    let upper = two_a / chi2_quantile(alpha / 2.0, nu)?;
    build(
        lower,
        upper,
        1.0 - alpha,
        IntervalKind::EqualTails,
        0,
        None,
        post,
    )
}

const HPD_MAX_OUTER: usize = 200;
const HPD_MAX_INNER: usize = 200;
const HPD_TOL: f64 = 1e-12;

/// Negative log kernel on the log scale: `(a+n) u + A e^{-u}`, `u = ln c`.
struct LogKernel {
    a_plus_n: f64,
    scale: f64,
}

impl LogKernel {
    fn value(&self, u: f64) -> f64 {
        self.a_plus_n * u + self.scale * (-u).exp()
    }

    fn slope(&self, u: f64) -> f64 {
        self.a_plus_n - self.scale * (-u).exp()
    }

    /// The unique `u > u_mode` with `value(u) == target`.
    fn upper_partner(&self, u_mode: f64, target: f64) -> Result<f64> {
        let mut lo = u_mode;
        let mut hi = u_mode + 1.0;
        let mut n = 0;
        while self.value(hi) < target {
            lo = hi;
            hi = u_mode + 2.0 * (hi - u_mode);
            n += 1;
            if n > HPD_MAX_INNER || !hi.is_finite() {
                return Err(Error::Convergence {
                    routine: "hpd_exact (upper endpoint bracket)",
                    iterations: n,
                });
            }
        }
        // convex and increasing right of the mode: Newton from the right
        // descends monotonically onto the root
        let mut u = hi;
        for _ in 0..HPD_MAX_INNER {
            let f = self.value(u) - target;
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            if f.abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
                return Ok(u);
            }
            let step = f / self.slope(u);
            let next = u - step;
            let next = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if (next - u).abs() <= 1e-16 * u.abs().max(1.0) || hi - lo <= 1e-16 * hi.abs().max(1.0)
            {
                return Ok(next);
            }
            u = next;
        }
        Err(Error::Convergence {
            routine: "hpd_exact (upper endpoint)",
            iterations: HPD_MAX_INNER,
        })
    }
}

/// Shortest interval with posterior coverage `1 - α`, solved on the
/// equal-density and coverage equations.
pub fn hpd_exact(post: &PosteriorParams, alpha: f64) -> Result<CredibleInterval> {
    check_alpha("hpd_exact", alpha)?;
    if post.a_plus_n() <= 1.0 {
        return Err(Error::DegeneratePosterior(
            "the posterior needs a + n > 1 to be unimodal".into(),
        ));
    }
    let target = 1.0 - alpha;
    let mode = posterior_mode(post);
    let u_mode = mode.ln();
    let kernel = LogKernel {
        a_plus_n: post.a_plus_n(),
        scale: post.scale(),
    };
    let interval_at = |u_lo: f64| -> Result<(f64, f64, f64)> {
        let u_hi = kernel.upper_partner(u_mode, kernel.value(u_lo))?;
        let (lo, hi) = (u_lo.exp(), u_hi.exp());
        Ok((lo, hi, posterior_coverage(lo, hi, post)?))
    };

    // coverage decreases as the lower end climbs to the mode
    let mut u_hi = u_mode;
    let mut u_lo = u_mode - 1.0;
    let mut iterations = 0;
    while interval_at(u_lo)?.2 < target {
        u_hi = u_lo;
        u_lo = u_mode - 2.0 * (u_mode - u_lo);
        iterations += 1;
        if iterations > HPD_MAX_OUTER {
            return Err(Error::Convergence {
                routine: "hpd_exact (lower endpoint bracket)",
                iterations,
            });
        }
    }

    let mut best = interval_at(u_lo)?;
    while iterations < HPD_MAX_OUTER {
        iterations += 1;
        let mid = 0.5 * (u_lo + u_hi);
        let current = interval_at(mid)?;
        if (current.2 - target).abs() < (best.2 - target).abs() {
            best = current;
        }
        if (current.2 - target).abs() <= HPD_TOL {
            break;
        }
        if current.2 > target {
            u_lo = mid;
        } else {
            u_hi = mid;
        }
        if u_hi - u_lo <= 1e-16 * u_mode.abs().max(1.0) {
            break;
        }
    }
    let (lower, upper, coverage) = best;
    if (coverage - target).abs() > 1e-9 {
        return Err(Error::Convergence {
            routine: "hpd_exact",
            iterations,
        });
    }
    build(
        lower,
        upper,
        target,
        IntervalKind::HpdExact,
        iterations,
        None,
        post,
    )
}

/// Lower endpoint of the HPM closed form for width `g`:
/// `(A + 2(a+n)g + sqrt(A² + 8A(a+n)g)) / (2(a+n))`.
fn hpm_lower(post: &PosteriorParams, g: f64) -> f64 {
    let a = post.scale();
    let k = post.a_plus_n();
    (a + 2.0 * k * g + (a * a + 8.0 * a * k * g).sqrt()) / (2.0 * k)
}

/// HPM closed-form interval `(c_L, c_L + g)` for a given width `g >= 0`.
///
/// The level is whatever posterior mass the interval carries. The closed
/// form starts at the mode for `g = 0` and moves entirely above it as `g`
/// grows, so it does not satisfy the equal-density condition; the
/// diagnostics report the mismatch.
pub fn hpd_hpm_closed_form(post: &PosteriorParams, g: f64) -> Result<CredibleInterval> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(domain(
            "hpd_hpm_closed_form",
            format!("g must be finite and >= 0, got {g}"),
        ));
    }
    let lower = hpm_lower(post, g);
    let upper = lower + g;
    let level = posterior_coverage(lower, upper, post)?;
    build(lower, upper, level, IntervalKind::HpdHpm, 0, Some(g), post)
}

const HPM_MAX_DOUBLINGS: usize = 60;
const HPM_MAX_BISECT: usize = 200;

fn hpm_coverage(post: &PosteriorParams, g: f64) -> Result<f64> {
    let lower = hpm_lower(post, g);
    posterior_coverage(lower, lower + g, post)
}

/// HPM interval whose width `g` is tuned so the posterior coverage equals
/// `1 - α`.
///
/// The coverage of the closed-form family rises from zero at `g = 0`, peaks,
/// and decays again, so only levels below that peak are reachable; other
/// targets give [`Error::BracketFailure`] naming the peak.
pub fn hpd_hpm_calibrated(post: &PosteriorParams, alpha: f64) -> Result<CredibleInterval> {
    check_alpha("hpd_hpm_calibrated", alpha)?;
    let target = 1.0 - alpha;
    let mode = posterior_mode(post);

    let mut g_lo = 0.0;
    let mut cov_lo = 0.0;
    let mut g_hi = mode / 10.0;
    let mut found = false;
    for _ in 0..=HPM_MAX_DOUBLINGS {
        let cov = hpm_coverage(post, g_hi)?;
        if cov >= target {
            found = true;
            break;
        }
        if cov < cov_lo {
            let (g_peak, cov_peak) = coverage_peak(post, g_lo / 2.0, g_hi)?;
            return Err(Error::BracketFailure {
                routine: "hpd_hpm_calibrated",
                detail: format!(
                    "coverage of the closed-form family peaks at {cov_peak:.6} (g = {g_peak:.6}), \
                     below the target {target}"
                ),
            });
        }
        g_lo = g_hi;
        cov_lo = cov;
        g_hi *= 2.0;
    }
    if !found {
        return Err(Error::BracketFailure {
            routine: "hpd_hpm_calibrated",
            detail: format!("coverage stayed below {target} after {HPM_MAX_DOUBLINGS} doublings"),
        });
    }

    let mut iterations = 0;
    let mut g = 0.5 * (g_lo + g_hi);
    while iterations < HPM_MAX_BISECT {
        iterations += 1;
        g = 0.5 * (g_lo + g_hi);
        let cov = hpm_coverage(post, g)?;
        if (cov - target).abs() <= 1e-13 {
            break;
        }
        if cov < target {
            g_lo = g;
        } else {
            g_hi = g;
        }
        if g_hi - g_lo <= 1e-16 * g_hi {
            break;
        }
    }
    let lower = hpm_lower(post, g);
    let interval = build(
        lower,
        lower + g,
        target,
        IntervalKind::HpdHpm,
        iterations,
        Some(g),
        post,
    )?;
    if interval.diagnostics.coverage_residual > 1e-8 {
        return Err(Error::Convergence {
            routine: "hpd_hpm_calibrated",
            iterations,
        });
    }
    Ok(interval)
}

/// Golden-section search for the widest-coverage `g` in `[lo, hi]`.
fn coverage_peak(post: &PosteriorParams, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a <= 1e-10 * b {
            break;
        }
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if hpm_coverage(post, c)? > hpm_coverage(post, d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let g = 0.5 * (a + b);
    Ok((g, hpm_coverage(post, g)?))
}

/// One point of the HPD length-versus-α curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub alpha: f64,
    pub length: f64,
    pub lower: f64,
    pub upper: f64,
    /// Central-difference estimate of `dL/dα`.
    pub slope_fd: f64,
    /// `-1 / π(c_L)`.
    pub slope_predicted: f64,
}

impl LengthPoint {
    pub fn slope_rel_error(&self) -> f64 {
        ((self.slope_fd - self.slope_predicted) / self.slope_predicted).abs()
    }
}

/// Exact HPD length on an increasing grid of α, with the finite-difference
/// slope `dL/dα` next to its predicted value `-1/π(c_L)`.
pub fn length_of_alpha(post: &PosteriorParams, alpha_grid: &[f64]) -> Result<Vec<LengthPoint>> {
    if alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    for &alpha in alpha_grid {
        check_alpha("length_of_alpha", alpha)?;
    }
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "alpha grid must be strictly increasing".into(),
        ));
    }
    alpha_grid
        .iter()
        .map(|&alpha| {
            let at = hpd_exact(post, alpha)?;
            let step = 1e-3f64.min(alpha / 2.0).min((1.0 - alpha) / 2.0);
            let above = hpd_exact(post, alpha + step)?;
            let below = hpd_exact(post, alpha - step)?;
            Ok(LengthPoint {
                alpha,
                length: at.length,
                lower: at.lower,
                upper: at.upper,
                slope_fd: (above.length - below.length) / (2.0 * step),
                slope_predicted: -1.0 / posterior_pdf(at.lower, post)?,
            })
        })
        .collect()
}
