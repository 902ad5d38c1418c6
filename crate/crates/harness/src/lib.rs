//! Experiment harness: run binary-discrimination tasks with confidence
//! ratings against a chat-completions endpoint, persist every trial, and
//! tally the counts the estimators consume.
//!
//! The protocol is single-turn by construction — each item is one fresh
//! conversation, prompts carry no trial history, and invalid replies are
//! recorded and excluded rather than re-asked.

pub mod config;
pub mod depletion;
pub mod error;
pub mod prompt;
pub mod protocol;
pub mod runner;
pub mod tally;
pub mod task;
pub mod trial;

pub use config::{RetryConfig, RunConfig, TaskConfig};
pub use depletion::{make_depletion_corpus, DepletionItem};
pub use error::{HarnessError, Result};
pub use prompt::{PromptMode, RiskConfig, TemplateRegistry};
pub use protocol::{parse_response, InvalidReason, ParsedResponse};
pub use runner::{prepare_items, run_experiment, RunSummary};
pub use tally::{tally, TallySummary, SCALE};
pub use task::{load_dataset, DatasetItem, TaskKind, TaskSpec};
pub use trial::{read_log, RunHeader, TrialRecord, TRIAL_SCHEMA};
