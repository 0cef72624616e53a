//! Seeded Monte Carlo experiments and the Table 1 reproduction.
//!
//! Repetition `r` draws from its own generator: ChaCha8 keyed by
//! `seed_from_u64(seed)` on stream `r` (see [`repetition_rng`]). Results are
//! collected per repetition and reduced in index order, so the output does
//! not depend on the number of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, analytic_moments, linear_coefficients, EstimatorId};
use crate::intervals::{equal_tails, hpd_exact, IntervalKind};
use crate::model::{PosteriorParams, PriorParams};
use crate::records::{extract_upper_records, rng_from_seed, sample_records_direct_with};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub delta_true: f64,
    pub n_records: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub prior: PriorParams,
    pub estimators: Vec<EstimatorId>,
    #[serde(default)]
    pub alpha_list: Vec<f64>,
    #[serde(default = "default_kinds")]
    pub interval_kinds: Vec<IntervalKind>,
}

fn default_kinds() -> Vec<IntervalKind> {
    vec![IntervalKind::EqualTails, IntervalKind::HpdExact]
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if !(self.delta_true > 0.0 && self.delta_true.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be > 0, got {}",
                self.delta_true
            )));
        }
        if self.n_records.is_empty() {
            return Err(Error::Config("no record counts given".into()));
        }
        if let Some(n) = self.n_records.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!(
                "record counts must be >= 2, got {n}"
            )));
        }
        if let Some(a) = self.alpha_list.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        PriorParams::new(self.prior.a, self.prior.b).map_err(|e| Error::Config(e.to_string()))?;
        if self.estimators.contains(&EstimatorId::MleSample) {
            return Err(Error::Config(
                "mle_sample needs raw observations; the direct sampler produces records only"
                    .into(),
            ));
        }
        if self.interval_kinds.contains(&IntervalKind::HpdHpm) {
            return Err(Error::Config(
                "hpd_hpm has no coverage calibration for typical alpha; simulate equal_tails or hpd_exact"
                    .into(),
            ));
        }
        Ok(())
    }

    fn max_n(&self) -> usize {
        self.n_records.iter().copied().max().unwrap_or(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub estimator: EstimatorId,
    pub n: usize,
    pub reps: usize,
    pub average_estimate: f64,
    /// Standard error of `average_estimate`.
    pub se_average: f64,
    pub empirical_mse: f64,
    /// Standard error of `empirical_mse`.
    pub se_mse: f64,
    pub analytic_mean: Option<f64>,
    pub analytic_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub kind: IntervalKind,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub empirical_coverage: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimResult {
    pub point: Vec<PointRow>,
    pub interval: Vec<IntervalRow>,
}

/// Generator for repetition `rep`: the seed keys ChaCha8, the repetition
/// index selects the stream.
pub fn repetition_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Mean and standard error of the mean, summed in slice order.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Estimator comparison with δ fixed at `delta_true`.
///
/// Each repetition samples `max(n_records)` records once; smaller `n` use
/// its leading records.
pub fn run_point_sim(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let prior = config.prior;
    let max_n = config.max_n();
    let delta = config.delta_true;

    // (estimator, n) cells in output order
    let mut cells = Vec::new();
    for &n in &config.n_records {
        for &id in &config.estimators {
            let coef = match id {
                EstimatorId::MleRecords => None,
                _ => Some(linear_coefficients(id, n, &prior)?),
            };
            cells.push((id, n, coef));
        }
    }

    let per_rep: Vec<Vec<f64>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = repetition_rng(config.seed, rep);
            let s = sample_records_direct_with(&mut rng, delta, max_n)?;
            Ok(cells
                .iter()
                .map(|&(_, n, coef)| match coef {
                    Some((m, d)) => m * (s.values[n - 1] - s.values[0]) + d,
                    None => s.values[n - 1] / n as f64,
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut point = Vec::with_capacity(cells.len());
    let mut column = vec![0.0; config.reps];
    let mut sq_err = vec![0.0; config.reps];
    for (j, &(id, n, _)) in cells.iter().enumerate() {
        for (r, row) in per_rep.iter().enumerate() {
            column[r] = row[j];
            sq_err[r] = (row[j] - delta) * (row[j] - delta);
        }
        let (average_estimate, se_average) = mean_se(&column);
        let (empirical_mse, se_mse) = mean_se(&sq_err);
        let moments = analytic_moments(id, delta, n, &prior).ok();
        point.push(PointRow {
            estimator: id,
            n,
            reps: config.reps,
            average_estimate,
            se_average,
            empirical_mse,
            se_mse,
            analytic_mean: moments.map(|m| m.mean),
            analytic_mse: moments.map(|m| m.mse),
        });
    }
    Ok(SimResult {
        point,
        interval: Vec::new(),
    })
}

/// Bayesian coverage study: each repetition draws δ from the prior, then
/// records given δ, then the requested intervals.
///
/// Interval endpoints are proportional to the posterior scale `A` at fixed
/// shape, so each `(kind, n, α)` interval is solved once at `A = 1` and
/// rescaled per repetition.
pub fn run_interval_sim(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let prior = config.prior;
    if prior.b <= 0.0 {
        return Err(Error::Config("prior sampling needs b > 0".into()));
    }
    if config.alpha_list.is_empty() {
        return Err(Error::Config("no alpha levels given".into()));
    }
    // E[1/δ] = a/b: G ~ Gamma(shape a, scale 1/b)
    let gamma = Gamma::new(prior.a, 1.0 / prior.b)
        .map_err(|e| Error::Config(format!("prior sampler: {e}")))?;
    let max_n = config.max_n();

    let mut cells = Vec::new();
    for &n in &config.n_records {
        let unit = PosteriorParams::new(prior.a + n as f64 - 1.0, 1.0)?;
        for &kind in &config.interval_kinds {
            for &alpha in &config.alpha_list {
                let ci = match kind {
                    IntervalKind::EqualTails => equal_tails(&unit, alpha)?,
                    IntervalKind::HpdExact => hpd_exact(&unit, alpha)?,
                    IntervalKind::HpdHpm => unreachable!("rejected by validate"),
                };
                cells.push((kind, n, alpha, ci.lower, ci.upper));
            }
        }
    }

    let per_rep: Vec<Vec<(bool, f64)>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = repetition_rng(config.seed, rep);
            let delta = draw_prior_delta(&mut rng, &gamma);
            let s = sample_records_direct_with(&mut rng, delta, max_n)?;
            Ok(cells
                .iter()
                .map(|&(_, n, _, lo, hi)| {
                    let scale = prior.b + s.values[n - 1] - s.values[0];
                    let (l, u) = (lo * scale, hi * scale);
                    (l <= delta && delta <= u, u - l)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let interval = cells
        .iter()
        .enumerate()
        .map(|(j, &(kind, n, alpha, _, _))| {
            let hits = per_rep.iter().filter(|row| row[j].0).count();
            let total_len: f64 = per_rep.iter().map(|row| row[j].1).sum();
            IntervalRow {
                kind,
                n,
                alpha,
                reps: config.reps,
                empirical_coverage: hits as f64 / config.reps as f64,
                mean_length: total_len / config.reps as f64,
            }
        })
        .collect();
    Ok(SimResult {
        point: Vec::new(),
        interval,
    })
}

fn draw_prior_delta<R: Rng>(rng: &mut R, gamma: &Gamma<f64>) -> f64 {
    loop {
        let g = gamma.sample(rng);
        if g > 0.0 {
            return 1.0 / g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub mle_records: f64,
    pub mle_urr: f64,
    pub bayes_quadratic: f64,
    pub bayes_squared: f64,
}

/// Estimates from the first `n = 2..=6` records of `data`.
pub fn reproduce_table1(data: &[f64], prior: &PriorParams) -> Result<Vec<Table1Row>> {
    let summary = extract_upper_records(data)?;
    if summary.n() < 6 {
        return Err(Error::InsufficientRecords {
            needed: 6,
            found: summary.n(),
        });
    }
    (2..=6)
        .map(|n| {
            let s = summary.first(n)?;
            let value = |id| estimators::estimate(id, &s, prior, None, None).map(|r| r.value);
            Ok(Table1Row {
                n,
                mle_records: value(EstimatorId::MleRecords)?,
                mle_urr: value(EstimatorId::MleUrr)?,
                bayes_quadratic: value(EstimatorId::BayesQuadratic)?,
                bayes_squared: value(EstimatorId::BayesSquared)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::EXAMPLE_ONE;

    fn config(reps: usize) -> SimConfig {
        SimConfig {
            delta_true: 2.0,
            n_records: vec![4],
            reps,
            seed: 11,
            prior: PriorParams::new(3.0, 5.0).unwrap(),
            estimators: vec![EstimatorId::BayesSquared, EstimatorId::MleRecords],
            alpha_list: vec![0.1],
            interval_kinds: default_kinds(),
        }
    }

    #[test]
    fn single_rep_is_the_estimate() {
        let res = run_point_sim(&config(1)).unwrap();
        let mut rng = repetition_rng(11, 0);
        let s = sample_records_direct_with(&mut rng, 2.0, 4).unwrap();
        let want = (s.values[3] - s.values[0] + 5.0) / 5.0;
        let row = &res.point[0];
        assert_eq!(row.average_estimate, want);
        assert_eq!(row.empirical_mse, (want - 2.0) * (want - 2.0));
        assert_eq!(row.se_average, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config(0);
        assert!(matches!(run_point_sim(&c), Err(Error::Config(_))));
        c.reps = 10;
        c.alpha_list = vec![1.0];
        assert!(matches!(run_interval_sim(&c), Err(Error::Config(_))));
        c.alpha_list = vec![0.1];
        c.n_records = vec![1];
        assert!(matches!(run_point_sim(&c), Err(Error::Config(_))));
        c.n_records = vec![3];
        c.estimators = vec![EstimatorId::MleSample];
        assert!(matches!(run_point_sim(&c), Err(Error::Config(_))));
    }

    #[test]
    fn streams_differ_between_reps() {
        let a: f64 = repetition_rng(5, 0).random();
        let b: f64 = repetition_rng(5, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, repetition_rng(5, 0).random::<f64>());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = config(2000);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| (run_point_sim(&c).unwrap(), run_interval_sim(&c).unwrap()));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| (run_point_sim(&c).unwrap(), run_interval_sim(&c).unwrap()));
        assert_eq!(one, many);
    }

    #[test]
    fn hpd_is_never_longer_in_sim() {
        let mut c = config(500);
        c.n_records = vec![2, 3, 6];
        c.alpha_list = vec![0.05, 0.5];
        let res = run_interval_sim(&c).unwrap();
        for et in res
            .interval
            .iter()
            .filter(|r| r.kind == IntervalKind::EqualTails)
        {
            let hpd = res
                .interval
                .iter()
                .find(|r| r.kind == IntervalKind::HpdExact && r.n == et.n && r.alpha == et.alpha)
                .unwrap();
            assert!(hpd.mean_length <= et.mean_length);
            assert!((0.0..=1.0).contains(&et.empirical_coverage));
        }
    }

    #[test]
    fn table1_bayes_quadratic_column() {
        let rows = reproduce_table1(&EXAMPLE_ONE, &PriorParams::new(3.0, 5.0).unwrap()).unwrap();
        let want = [1.863846, 1.763976, 1.743353, 1.793872, 1.606310];
        for (row, w) in rows.iter().zip(want) {
            assert!((row.bayes_quadratic - w).abs() < 5e-7, "{row:?}");
        }
    }

    #[test]
    fn table1_needs_six_records() {
        let err = reproduce_table1(&[1.0, 2.0, 3.0], &PriorParams::new(3.0, 5.0).unwrap());
        assert!(matches!(
            err,
            Err(Error::InsufficientRecords {
                needed: 6,
                found: 3
            })
        ));
    }
}
