//! Run configuration, loadable from a JSON or TOML file. Command-line flags
//! override file values (config < flags); credentials only ever come from
//! the environment variable named by `api_key_env`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::prompt::{PromptMode, RiskConfig};
use crate::task::{TaskKind, TaskSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryConfig {
    /// Retries after the first attempt, for transport-level failures only.
    #[serde(default = "default_retry_max")]
    pub max: u32,
    /// Base backoff; attempt k waits backoff_ms * 2^k.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_retry_max() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig { max: default_retry_max(), backoff_ms: default_backoff_ms() }
    }
}

/// Task block of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub kind: TaskKind,
    pub dataset_path: PathBuf,
    #[serde(default)]
    pub text_field: Option<String>,
    #[serde(default)]
    pub label_field: Option<String>,
    /// Depletion target for the word-depletion task.
    #[serde(default = "default_target_word")]
    pub target_word: String,
    /// Deletion probability for the word-depletion task.
    #[serde(default = "default_p_delete")]
    pub p_delete: f64,
}

fn default_target_word() -> String {
    "the".to_string()
}
fn default_p_delete() -> f64 {
    0.5
}

impl TaskConfig {
    pub fn new(kind: TaskKind, dataset_path: impl Into<PathBuf>) -> TaskConfig {
        TaskConfig {
            kind,
            dataset_path: dataset_path.into(),
            text_field: None,
            label_field: None,
            target_word: default_target_word(),
            p_delete: default_p_delete(),
        }
    }

    pub fn spec(&self) -> TaskSpec {
        TaskSpec {
            kind: self.kind,
            dataset_path: self.dataset_path.clone(),
            text_field: self.text_field.clone(),
            label_field: self.label_field.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Base URL of an OpenAI-style chat-completions service; the request
    /// goes to `<endpoint_url>/chat/completions`.
    pub endpoint_url: String,
    pub model_id: String,
    pub task: TaskConfig,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub mode: PromptMode,
    /// Trials to run; defaults to the task's protocol budget.
    #[serde(default)]
    pub n_trials: Option<u64>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub retry: RetryConfig,
    /// Abort once the invalid-reply fraction exceeds this.
    #[serde(default = "default_invalid_ceiling")]
    pub invalid_ceiling: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub template_dir: Option<PathBuf>,
    /// Environment variable holding the bearer token; requests go out
    /// unauthenticated when it is unset.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    /// Optional global request-rate cap.
    #[serde(default)]
    pub rate_limit_rps: Option<f64>,
    #[serde(default = "default_timeout_s")]
    pub request_timeout_s: u64,
    /// Decoding parameters passed through to the endpoint verbatim
    /// (temperature and friends); recorded in run metadata, never defaulted.
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    /// Trial log destination.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_concurrency() -> usize {
    4
}
fn default_invalid_ceiling() -> f64 {
    0.05
}
fn default_api_key_env() -> String {
    "LLM_API_KEY".to_string()
}
fn default_timeout_s() -> u64 {
    120
}

impl RunConfig {
    pub fn new(endpoint_url: impl Into<String>, model_id: impl Into<String>, task: TaskConfig) -> RunConfig {
        RunConfig {
            endpoint_url: endpoint_url.into(),
            model_id: model_id.into(),
            task,
            risk: RiskConfig::default(),
            mode: PromptMode::default(),
            n_trials: None,
            concurrency: default_concurrency(),
            retry: RetryConfig::default(),
            invalid_ceiling: default_invalid_ceiling(),
            seed: 0,
            template_dir: None,
            api_key_env: default_api_key_env(),
            rate_limit_rps: None,
            request_timeout_s: default_timeout_s(),
            params: serde_json::Map::new(),
            out: None,
        }
    }

    pub fn n_trials(&self) -> u64 {
        self.n_trials.unwrap_or_else(|| self.task.kind.default_n_trials())
    }

    /// Load from `.json` or `.toml` by extension.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            Some("toml") => {
                toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{e}")))
            }
            other => Err(HarnessError::Config(format!(
                "config must be .json or .toml, got {other:?}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(HarnessError::Config("concurrency must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.invalid_ceiling) {
            return Err(HarnessError::Config("invalid_ceiling must be in [0, 1]".into()));
        }
        if self.n_trials() == 0 {
            return Err(HarnessError::Config("n_trials must be >= 1".into()));
        }
        if let Some(rps) = self.rate_limit_rps {
            // written this way so NaN is rejected too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(rps > 0.0) {
                return Err(HarnessError::Config("rate_limit_rps must be > 0".into()));
            }
        }
        Ok(())
    }
}
