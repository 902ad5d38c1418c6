//! Task definitions and dataset loading.
//!
//! All three tasks are binary discriminations over text items with a fixed
//! label convention: dataset label 0 maps to S1, label 1 to S2.
//!
//! - A (sentiment): negative = 0 = S1, positive = 1 = S2
//! - B (oral vs written): oral = 0 = S1, written = 1 = S2
//! - C (word depletion): unchanged = 0 = S1, deleted = 1 = S2

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use metacog_core::StimulusClass;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ASentiment,
    BOralWritten,
    CWordDepletion,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::ASentiment => "a_sentiment",
            TaskKind::BOralWritten => "b_oral_written",
            TaskKind::CWordDepletion => "c_word_depletion",
        }
    }

    pub fn parse(name: &str) -> Option<TaskKind> {
        match name {
            "a_sentiment" | "a" => Some(TaskKind::ASentiment),
            "b_oral_written" | "b" => Some(TaskKind::BOralWritten),
            "c_word_depletion" | "c" => Some(TaskKind::CWordDepletion),
            _ => None,
        }
    }

    /// Human name of each response class, used by the risk paragraph.
    pub fn response_name(&self, class: StimulusClass) -> &'static str {
        match (self, class) {
            (TaskKind::ASentiment, StimulusClass::S1) => "negative",
            (TaskKind::ASentiment, StimulusClass::S2) => "positive",
            (TaskKind::BOralWritten, StimulusClass::S1) => "oral transcription",
            (TaskKind::BOralWritten, StimulusClass::S2) => "written source",
            (TaskKind::CWordDepletion, StimulusClass::S1) => "unchanged",
            (TaskKind::CWordDepletion, StimulusClass::S2) => "word removed",
        }
    }

    /// Default text/label column names for this task's dataset files.
    pub fn default_fields(&self) -> (&'static str, &'static str) {
        match self {
            TaskKind::ASentiment => ("sentence", "label"),
            _ => ("text", "label"),
        }
    }

    /// Trial budget used when a run does not set one: 2e4 for the sentiment
    /// task (its sensitivity runs high), 1e4 otherwise.
    pub fn default_n_trials(&self) -> u64 {
        match self {
            TaskKind::ASentiment => 20_000,
            _ => 10_000,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A task bound to a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub dataset_path: PathBuf,
    /// Column holding the item text; defaults per task.
    #[serde(default)]
    pub text_field: Option<String>,
    /// Column holding the 0/1 label; defaults per task.
    #[serde(default)]
    pub label_field: Option<String>,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, dataset_path: impl Into<PathBuf>) -> TaskSpec {
        TaskSpec { kind, dataset_path: dataset_path.into(), text_field: None, label_field: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub text: String,
    pub label: StimulusClass,
}

/// Load a TSV/CSV dataset of (text, binary label) rows. The delimiter comes
/// from the file extension (`.tsv` vs anything else); the header row must
/// name both configured columns; labels must be exactly 0 or 1. Order is
/// preserved.
pub fn load_dataset(spec: &TaskSpec) -> Result<Vec<DatasetItem>> {
    let (default_text, default_label) = spec.kind.default_fields();
    let text_field = spec.text_field.as_deref().unwrap_or(default_text);
    let label_field = spec.label_field.as_deref().unwrap_or(default_label);
    let path = &spec.dataset_path;

    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(path)
        .map_err(|e| dataset_err(path, 1, format!("{e}")))?;

    let headers = reader.headers().map_err(|e| dataset_err(path, 1, format!("{e}")))?;
    let text_idx = headers
        .iter()
        .position(|h| h == text_field)
        .ok_or_else(|| dataset_err(path, 1, format!("missing column {text_field:?}")))?;
    let label_idx = headers
        .iter()
        .position(|h| h == label_field)
        .ok_or_else(|| dataset_err(path, 1, format!("missing column {label_field:?}")))?;

    let mut items = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| dataset_err(path, line, format!("{e}")))?;
        let text = record
            .get(text_idx)
            .ok_or_else(|| dataset_err(path, line, "short row".into()))?
            .to_string();
        let raw_label = record
            .get(label_idx)
            .ok_or_else(|| dataset_err(path, line, "short row".into()))?
            .trim();
        let label = raw_label
            .parse::<u8>()
            .ok()
            .and_then(StimulusClass::from_binary_label)
            .ok_or_else(|| {
                dataset_err(path, line, format!("label {raw_label:?} is not 0 or 1"))
            })?;
        items.push(DatasetItem { text, label });
    }
    Ok(items)
}

fn dataset_err(path: &Path, line: usize, msg: String) -> HarnessError {
    HarnessError::Dataset { path: path.to_path_buf(), line, msg }
}
