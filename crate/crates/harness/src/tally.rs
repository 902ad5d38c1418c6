//! Turn a run's trial records into estimator-ready counts.

use std::collections::BTreeMap;

use metacog_core::counts::{CountsData, RatingCounts, StimulusClass, Type1Counts};

use crate::error::{HarnessError, Result};
use crate::prompt::PromptMode;
use crate::trial::TrialRecord;

/// Confidence scale of the reply protocol.
pub const SCALE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TallySummary {
    pub data: CountsData,
    pub attempted: u64,
    pub valid: u64,
    pub invalid: u64,
    /// Invalid counts keyed by reason code.
    pub by_reason: BTreeMap<String, u64>,
}

/// Tally valid records into counts; invalid records are retained in the log
/// but only show up here in the validity accounting. All records must share
/// one (task, risk, mode, model) tuple.
pub fn tally(records: &[TrialRecord]) -> Result<TallySummary> {
    let first = records.first().ok_or(HarnessError::EmptyTally)?;
    for r in records {
        if r.task != first.task
            || r.risk != first.risk
            || r.mode != first.mode
            || r.model_id != first.model_id
        {
            return Err(HarnessError::MixedTally(format!(
                "trial {} has ({}, {}, {}, {}), run started with ({}, {}, {}, {})",
                r.trial_id,
                r.task,
                r.risk,
                r.mode,
                r.model_id,
                first.task,
                first.risk,
                first.mode,
                first.model_id
            )));
        }
    }

    let mut by_reason: BTreeMap<String, u64> = BTreeMap::new();
    let mut valid = 0u64;
    let mut rated = RatingCounts::new(SCALE)?;
    let mut type1 = Type1Counts::default();

    for r in records {
        match (r.decision, r.confidence, r.mode) {
            (Some(decision), Some(conf), PromptMode::WithConfidence) => {
                valid += 1;
                rated.add(r.true_label, decision, conf as usize, 1.0);
            }
            (Some(decision), None, PromptMode::Type1Only) => {
                valid += 1;
                match (r.true_label, decision) {
                    (StimulusClass::S1, StimulusClass::S1) => type1.n_s1_resp_s1 += 1,
                    (StimulusClass::S1, StimulusClass::S2) => type1.n_s1_resp_s2 += 1,
                    (StimulusClass::S2, StimulusClass::S1) => type1.n_s2_resp_s1 += 1,
                    (StimulusClass::S2, StimulusClass::S2) => type1.n_s2_resp_s2 += 1,
                }
            }
            _ => {
                let reason = r
                    .invalid_reason
                    .map(|x| x.code().to_string())
                    .unwrap_or_else(|| "unrecorded".to_string());
                *by_reason.entry(reason).or_insert(0) += 1;
            }
        }
    }

    if valid == 0 {
        return Err(HarnessError::EmptyTally);
    }
    let attempted = records.len() as u64;
    let data = match first.mode {
        PromptMode::WithConfidence => CountsData::Rated(rated),
        PromptMode::Type1Only => CountsData::Type1(type1),
    };
    Ok(TallySummary { data, attempted, valid, invalid: attempted - valid, by_reason })
}
