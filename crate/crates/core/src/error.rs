use thiserror::Error;

/// Errors produced by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityDomain(f64),

    #[error("stimulus class {0} has zero trials")]
    EmptyStimulusClass(crate::counts::StimulusClass),

    #[error("undefined normalized criterion: d' = 0")]
    UndefinedCPrime,

    #[error("d' must be strictly positive, got {0}")]
    NonPositiveDPrime(f64),

    #[error("confidence scale must have at least 2 levels, got {0}")]
    ScaleTooSmall(usize),

    #[error("criteria not strictly increasing: {0}")]
    CriteriaOrdering(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid observer spec: {0}")]
    InvalidObserver(String),

    #[error("invalid simulation options: {0}")]
    InvalidSimOptions(String),

    #[error("counts file, line {line}: {msg}")]
    CountsParse { line: usize, msg: String },

    #[error("variance must be strictly positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("invalid interval: low {low} must be <= high {high}")]
    InvalidInterval { low: f64, high: f64 },

    #[error("invalid ROPE: low {low} must be < high {high}")]
    InvalidRope { low: f64, high: f64 },

    #[error("bootstrap: {0}")]
    Bootstrap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
