use thiserror::Error;

/// Errors produced by model construction, the solvers and the simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("phase count must be at least 1, got {0}")]
    InvalidPhaseCount(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("receiver timeout {timeout} is shorter than the refresh period {period}")]
    TimeoutBelowPeriod { timeout: f64, period: f64 },

    #[error("moment generating function evaluated at or beyond its pole (1 + delta*s/k = {0})")]
    Pole(f64),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("time points must be finite, non-negative and sorted (offending value {0})")]
    InvalidTime(f64),

    #[error("numerical solver failure: {0}")]
    Solver(String),

    #[error("k = {k}: {source}")]
    AtPhaseCount { k: usize, source: Box<Error> },

    #[error("phase sweep did not converge below {tolerance} by k = {k_max}")]
    NotConverged { tolerance: f64, k_max: usize },

    #[error("invalid simulation config: {0}")]
    SimConfig(String),

    #[error("horizon too short: batch {batch} of {batches} saw no state transition")]
    HorizonTooShort { batch: usize, batches: usize },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Solver(_) | Error::NotConverged { .. } => true,
            Error::AtPhaseCount { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
