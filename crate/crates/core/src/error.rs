use thiserror::Error;

use crate::records::RecordSummary;

/// Errors produced by the numerical routines and the record machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {routine}: {detail}")]
    Domain {
        routine: &'static str,
        detail: String,
    },

    #[error("{routine} did not converge after {iterations} iterations")]
    Convergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("need at least {needed} records, found {found}")]
    InsufficientRecords { needed: usize, found: usize },

    #[error("record stream exhausted after {draws} draws with {} of {wanted} records", .partial.n())]
    CapExhausted {
        draws: u64,
        wanted: usize,
        partial: Box<RecordSummary>,
    },

    #[error("interval endpoints out of order: {lower} > {upper}")]
    Ordering { lower: f64, upper: f64 },

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("unsupported estimator: {0}")]
    UnsupportedEstimator(String),

    #[error("no bracket for {routine}: {detail}")]
    BracketFailure {
        routine: &'static str,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(routine: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        routine,
        detail: detail.into(),
    }
}
