//! Trial records and the append-only JSONL log.
//!
//! A log file starts with one schema-versioned header line describing the
//! run, followed by one JSON object per completed trial. Appending is the
//! only mutation; resumption reads the existing file, checks the header
//! against the current run, and skips trial ids already present.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use metacog_core::StimulusClass;

use crate::error::{HarnessError, Result};
use crate::prompt::{PromptMode, RiskConfig};
use crate::protocol::InvalidReason;
use crate::task::TaskKind;

pub const TRIAL_SCHEMA: &str = "metacog/trials/v1";

/// First line of every trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema: String,
    pub task: TaskKind,
    pub risk: RiskConfig,
    pub mode: PromptMode,
    pub model_id: String,
    pub endpoint_url: String,
    pub n_trials: u64,
    pub seed: u64,
    /// Label convention note, recorded with the data: dataset label 0 -> S1,
    /// 1 -> S2.
    pub label_mapping: String,
    pub created_unix_ms: u64,
}

impl RunHeader {
    /// Fields that must agree for a resume to be legal.
    pub fn compatible_with(&self, other: &RunHeader) -> bool {
        self.schema == other.schema
            && self.task == other.task
            && self.risk == other.risk
            && self.mode == other.mode
            && self.model_id == other.model_id
            && self.n_trials == other.n_trials
            && self.seed == other.seed
    }
}

/// One completed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub task: TaskKind,
    pub risk: RiskConfig,
    pub mode: PromptMode,
    pub input_text: String,
    pub true_label: StimulusClass,
    pub raw_response: String,
    /// Present iff the reply parsed under the protocol.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decision: Option<StimulusClass>,
    /// Present iff valid and the run asked for a rating.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confidence: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub invalid_reason: Option<InvalidReason>,
    pub model_id: String,
    /// Unix epoch milliseconds at request start.
    pub request_timestamp: u64,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

impl TrialRecord {
    pub fn is_valid(&self) -> bool {
        self.decision.is_some()
    }
}

/// Create a fresh log with its header line, truncating nothing — the file
/// must not already exist.
pub fn create_log(path: &Path, header: &RunHeader) -> Result<()> {
    let mut file = OpenOptions::new().create_new(true).write(true).open(path).map_err(|e| {
        HarnessError::TrialLog { path: path.to_path_buf(), msg: format!("create: {e}") }
    })?;
    writeln!(file, "{}", serde_json::to_string(header)?)?;
    Ok(())
}

/// Append one record.
pub fn append_record(path: &Path, record: &TrialRecord) -> Result<()> {
    let mut file = OpenOptions::new().append(true).open(path)?;
    writeln!(file, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

/// Read a full log: header plus records, tolerating a truncated final line
/// (the tail of a killed run).
pub fn read_log(path: &Path) -> Result<(RunHeader, Vec<TrialRecord>)> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .transpose()?
        .ok_or_else(|| HarnessError::TrialLog { path: path.to_path_buf(), msg: "empty".into() })?;
    let header: RunHeader = serde_json::from_str(&header_line).map_err(|e| {
        HarnessError::TrialLog { path: path.to_path_buf(), msg: format!("bad header: {e}") }
    })?;
    if header.schema != TRIAL_SCHEMA {
        return Err(HarnessError::TrialLog {
            path: path.to_path_buf(),
            msg: format!("unknown schema {:?}", header.schema),
        });
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(&line) {
            Ok(r) => records.push(r),
            Err(_) => break, // truncated tail from an interrupted writer
        }
    }
    Ok((header, records))
}

/// The set of trial ids already persisted in a log.
pub fn persisted_ids(records: &[TrialRecord]) -> BTreeSet<u64> {
    records.iter().map(|r| r.trial_id).collect()
}

/// Path helper: `<out>.counts.csv` next to a trial log.
pub fn counts_path_for(log_path: &Path) -> PathBuf {
    let mut name = log_path.file_stem().unwrap_or_default().to_os_string();
    name.push(".counts.csv");
    log_path.with_file_name(name)
}

pub fn now_unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
