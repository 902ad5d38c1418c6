//! Word-depletion corpus construction: keep only sentences containing the
//! target word as a standalone token, then delete one occurrence from each
//! sentence with a fixed probability.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{HarnessError, Result};

/// One constructed depletion item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepletionItem {
    pub original_text: String,
    pub presented_text: String,
    pub deleted: bool,
    /// Whitespace-token index of the deleted occurrence.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub deleted_position: Option<usize>,
    pub rng_seed: u64,
}

/// Byte ranges of standalone (word-boundary, case-insensitive) occurrences
/// of `word` in `text`, with the whitespace-token index of each.
fn find_occurrences(text: &str, word: &str) -> Vec<(usize, usize, usize)> {
    let lower_text = text.to_lowercase();
    let lower_word = word.to_lowercase();
    if lower_word.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(rel) = lower_text[from..].find(&lower_word) {
        let start = from + rel;
        let end = start + lower_word.len();
        let left_ok = lower_text[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let right_ok = lower_text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if left_ok && right_ok {
            let token_index = text[..start].split_whitespace().count();
            out.push((start, end, token_index));
        }
        from = start + 1;
    }
    out
}

/// Remove the occurrence at byte range (start, end) along with one adjacent
/// space (the following one when present, else the preceding one).
fn splice_out(text: &str, start: usize, end: usize) -> String {
    let (mut start, mut end) = (start, end);
    if text[end..].starts_with(' ') {
        end += 1;
    } else if text[..start].ends_with(' ') {
        start -= 1;
    }
    format!("{}{}", &text[..start], &text[end..])
}

/// Build the depletion corpus: sentences without a standalone occurrence of
/// `target_word` are dropped; each retained sentence is deleted with
/// probability `p_delete`, choosing one occurrence uniformly. Deterministic
/// under `seed`.
pub fn make_depletion_corpus(
    items: &[String],
    target_word: &str,
    p_delete: f64,
    seed: u64,
) -> Result<Vec<DepletionItem>> {
    if !(0.0..=1.0).contains(&p_delete) {
        return Err(HarnessError::ProbabilityRange(p_delete));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut corpus = Vec::new();
    for text in items {
        let occurrences = find_occurrences(text, target_word);
        if occurrences.is_empty() {
            continue;
        }
        let delete = rng.random_range(0.0..1.0) < p_delete;
        if delete {
            let (start, end, token_index) = occurrences[rng.random_range(0..occurrences.len())];
            corpus.push(DepletionItem {
                original_text: text.clone(),
                presented_text: splice_out(text, start, end),
                deleted: true,
                deleted_position: Some(token_index),
                rng_seed: seed,
            });
        } else {
            corpus.push(DepletionItem {
                original_text: text.clone(),
                presented_text: text.clone(),
                deleted: false,
                deleted_position: None,
                rng_seed: seed,
            });
        }
    }
    if corpus.is_empty() {
        return Err(HarnessError::NoQualifyingSentences(target_word.to_string()));
    }
    Ok(corpus)
}
