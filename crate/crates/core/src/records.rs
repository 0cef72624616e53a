//! Upper record values, record times and the record range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Upper records of a sequence together with their 1-based record times.
///
/// Records produced by [`sample_records_direct`] have no underlying
/// observation stream; their `times` are the placeholders `1..=n` and
/// `synthetic_times` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub values: Vec<f64>,
    pub times: Vec<usize>,
    #[serde(default)]
    pub synthetic_times: bool,
}

impl RecordSummary {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `values[n-1] - values[0]`, or `None` with fewer than two records.
    pub fn range(&self) -> Option<f64> {
        match self.values.as_slice() {
            [first, .., last] => Some(last - first),
            _ => None,
        }
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// The summary restricted to its first `n` records.
    pub fn first(&self, n: usize) -> Result<RecordSummary> {
        if n == 0 || n > self.n() {
            return Err(Error::InsufficientRecords {
                needed: n.max(1),
                found: self.n(),
            });
        }
        Ok(RecordSummary {
            values: self.values[..n].to_vec(),
            times: self.times[..n].to_vec(),
            synthetic_times: self.synthetic_times,
        })
    }
}

/// Scans `data` for upper records. An observation equal to the current
/// record counts as a new record.
pub fn extract_upper_records(data: &[f64]) -> Result<RecordSummary> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut values = vec![data[0]];
    let mut times = vec![1];
    for (j, &x) in data.iter().enumerate().skip(1) {
        if x >= *values.last().unwrap() {
            values.push(x);
            times.push(j + 1);
        }
    }
    Ok(RecordSummary {
        values,
        times,
        synthetic_times: false,
    })
}

/// Record ranges `values[k] - values[0]` for `k = 1..n-1`.
pub fn record_range_sequence(summary: &RecordSummary) -> Result<Vec<f64>> {
    if summary.n() < 2 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: summary.n(),
        });
    }
    let first = summary.values[0];
    Ok(summary.values[1..].iter().map(|v| v - first).collect())
}

/// One exponential draw with scale `delta` via `-δ ln(1 - U)`, `U ∈ [0, 1)`.
pub fn exponential_draw<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> f64 {
    let u: f64 = rng.random();
    -delta * (1.0 - u).ln()
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_sampler_args(routine: &'static str, delta: f64, n: usize) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(
            routine,
            format!("delta must be finite and > 0, got {delta}"),
        ));
    }
    if n < 2 {
        return Err(domain(routine, format!("n must be >= 2, got {n}")));
    }
    Ok(())
}

/// Samples `n` upper records of an Exp(δ) stream directly: the first record
/// is an exponential draw and, by memorylessness, each later record adds an
/// independent exponential excess.
pub fn sample_records_direct(delta: f64, n: usize, seed: u64) -> Result<RecordSummary> {
    sample_records_direct_with(&mut rng_from_seed(seed), delta, n)
}

pub fn sample_records_direct_with<R: Rng + ?Sized>(
    rng: &mut R,
    delta: f64,
    n: usize,
) -> Result<RecordSummary> {
    check_sampler_args("sample_records_direct", delta, n)?;
    let mut values = Vec::with_capacity(n);
    let mut current = exponential_draw(rng, delta);
    values.push(current);
    for _ in 1..n {
        current += exponential_draw(rng, delta);
        values.push(current);
    }
    Ok(RecordSummary {
        values,
        times: (1..=n).collect(),
        synthetic_times: true,
    })
}

/// Draws an iid Exp(δ) stream and extracts records until `n` are found.
///
/// Record times are heavy tailed (`E[T(n)]` is infinite for `n >= 2`), so the
/// stream is cut after `cap` draws; exhaustion returns the partial summary in
/// [`Error::CapExhausted`].
pub fn sample_records_stream(delta: f64, n: usize, seed: u64, cap: u64) -> Result<RecordSummary> {
    sample_records_stream_with(&mut rng_from_seed(seed), delta, n, cap)
}

pub fn sample_records_stream_with<R: Rng + ?Sized>(
    rng: &mut R,
    delta: f64,
    n: usize,
    cap: u64,
) -> Result<RecordSummary> {
    check_sampler_args("sample_records_stream", delta, n)?;
    let mut values = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    let mut draws = 0u64;
    while draws < cap {
        let x = exponential_draw(rng, delta);
        draws += 1;
        if values.last().is_none_or(|&last| x >= last) {
            values.push(x);
            times.push(draws as usize);
            if values.len() == n {
                return Ok(RecordSummary {
                    values,
                    times,
                    synthetic_times: false,
                });
            }
        }
    }
    Err(Error::CapExhausted {
        draws,
        wanted: n,
        partial: Box::new(RecordSummary {
            values,
            times,
            synthetic_times: false,
        }),
    })
}
