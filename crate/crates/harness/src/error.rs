use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset {path}, line {line}: {msg}")]
    Dataset { path: PathBuf, line: usize, msg: String },

    #[error("no sentence contains the target word {0:?}")]
    NoQualifyingSentences(String),

    #[error("invalid probability {0} (must be in [0, 1])")]
    ProbabilityRange(f64),

    #[error("no template registered for {0}")]
    MissingTemplate(String),

    #[error("config: {0}")]
    Config(String),

    #[error("trial log {path}: {msg}")]
    TrialLog { path: PathBuf, msg: String },

    #[error("run aborted: invalid-response rate {rate:.3} exceeded ceiling {ceiling:.3} after {attempted} trials")]
    InvalidRateExceeded { rate: f64, ceiling: f64, attempted: u64 },

    #[error("credentials rejected by endpoint (HTTP {0})")]
    CredentialsRejected(u16),

    #[error("trial budget {requested} exceeds dataset size {available}")]
    NotEnoughItems { requested: u64, available: u64 },

    #[error("mixed run metadata in tally: {0}")]
    MixedTally(String),

    #[error("empty tally: no valid records")]
    EmptyTally,

    #[error(transparent)]
    Core(#[from] metacog_core::Error),

    #[error(transparent)]
    Http(#[from] reqwest::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
