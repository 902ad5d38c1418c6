//! The strict-JSON reply protocol and its parser.
//!
//! A valid reply is exactly one JSON object, optionally wrapped in a code
//! fence or whitespace: `{"decision": 0|1, "confidence": 1..5}` when a
//! rating was requested, `{"decision": 0|1}` otherwise. Decisions and
//! confidences may arrive as numbers or numeric strings. Anything else is
//! an *invalid* reply — a value, not an error — carrying a reason code.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use metacog_core::StimulusClass;

use crate::prompt::PromptMode;

/// Why a raw reply failed to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    /// Not parseable as a single JSON value (includes trailing content).
    NotJson,
    /// Parsed, but not a JSON object.
    NotAnObject,
    MissingDecision,
    /// Decision present but not 0 or 1.
    DecisionOutOfRange,
    MissingConfidence,
    /// Confidence present but not an integer in 1..=5.
    ConfidenceOutOfRange,
    /// Endpoint answered 200 without a usable completion payload.
    EndpointShape,
}

impl InvalidReason {
    pub fn code(&self) -> &'static str {
        match self {
            InvalidReason::NotJson => "not_json",
            InvalidReason::NotAnObject => "not_an_object",
            InvalidReason::MissingDecision => "missing_decision",
            InvalidReason::DecisionOutOfRange => "decision_out_of_range",
            InvalidReason::MissingConfidence => "missing_confidence",
            InvalidReason::ConfidenceOutOfRange => "confidence_out_of_range",
            InvalidReason::EndpointShape => "endpoint_shape",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Parse outcome for one raw model reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedResponse {
    Valid { decision: StimulusClass, confidence: Option<u8> },
    Invalid(InvalidReason),
}

impl ParsedResponse {
    pub fn is_valid(&self) -> bool {
        matches!(self, ParsedResponse::Valid { .. })
    }
}

/// Strip a single surrounding Markdown code fence, if present.
fn strip_fence(raw: &str) -> &str {
    let trimmed = raw.trim();
    if !trimmed.starts_with("```") {
        return trimmed;
    }
    let rest = match trimmed.find('\n') {
        Some(i) => &trimmed[i + 1..],
        None => return trimmed,
    };
    rest.trim_end().strip_suffix("```").map(str::trim).unwrap_or(trimmed)
}

fn as_binary(value: &Value) -> Option<u8> {
    let n = match value {
        Value::Number(n) => n.as_u64()?,
        Value::String(s) => s.trim().parse::<u64>().ok()?,
        _ => return None,
    };
    u8::try_from(n).ok().filter(|v| *v <= 1)
}

fn as_confidence(value: &Value) -> Option<u8> {
    let n = match value {
        Value::Number(n) => n.as_u64()?,
        Value::String(s) => s.trim().parse::<u64>().ok()?,
        _ => return None,
    };
    u8::try_from(n).ok().filter(|v| (1..=5).contains(v))
}

/// Parse one raw reply under the protocol for `mode`.
pub fn parse_response(raw: &str, mode: PromptMode) -> ParsedResponse {
    let body = strip_fence(raw);
    let value: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(_) => return ParsedResponse::Invalid(InvalidReason::NotJson),
    };
    let object = match value.as_object() {
        Some(o) => o,
        None => return ParsedResponse::Invalid(InvalidReason::NotAnObject),
    };

    let decision = match object.get("decision") {
        None => return ParsedResponse::Invalid(InvalidReason::MissingDecision),
        Some(v) => match as_binary(v) {
            Some(d) => StimulusClass::from_binary_label(d).expect("0 or 1"),
            None => return ParsedResponse::Invalid(InvalidReason::DecisionOutOfRange),
        },
    };

    let confidence = match mode {
        PromptMode::Type1Only => None,
        PromptMode::WithConfidence => match object.get("confidence") {
            None => return ParsedResponse::Invalid(InvalidReason::MissingConfidence),
            Some(v) => match as_confidence(v) {
                Some(c) => Some(c),
                None => return ParsedResponse::Invalid(InvalidReason::ConfidenceOutOfRange),
            },
        },
    };

    ParsedResponse::Valid { decision, confidence }
}
