//! Rejection sampling over answer candidates.
//!
//! Samples are grouped by their normalized form (the same normalizer the
//! metrics use, so "vienna." and "Vienna" vote together) and the most
//! frequent group wins; ties go to the group whose earliest sample came
//! first. A winning group made of none-literals is the None-result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::metrics::normalize_answer;

/// One vote bucket: a normalized answer form, how often it was sampled, and
/// where. `raw_text` is the earliest sample of the group verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub raw_text: String,
    pub normalized_text: String,
    pub frequency: usize,
    pub sample_indices: Vec<usize>,
}

/// Result of majority voting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MajorityOutcome {
    Answer(AnswerCandidate),
    /// The winning group is a none-literal: evidence was insufficient.
    None(AnswerCandidate),
}

impl MajorityOutcome {
    pub fn winner(&self) -> &AnswerCandidate {
        match self {
            MajorityOutcome::Answer(c) | MajorityOutcome::None(c) => c,
        }
    }

    pub fn is_none_result(&self) -> bool {
        matches!(self, MajorityOutcome::None(_))
    }

    pub fn answer(&self) -> Option<&str> {
        match self {
            MajorityOutcome::Answer(c) => Some(&c.raw_text),
            MajorityOutcome::None(_) => None,
        }
    }
}

/// Is `text` an insufficient-evidence marker? Case-insensitive exact match
/// after trimming, plus a normalized-form match so trailing punctuation
/// ("None.") does not defeat detection.
pub fn is_none_literal(text: &str, none_literals: &[String]) -> bool {
    let trimmed = text.trim().to_lowercase();
    let normalized = normalize_answer(text);
    none_literals
        .iter()
        .any(|lit| trimmed == lit.trim().to_lowercase() || normalized == normalize_answer(lit))
}

/// Group samples by normalized form and return the most frequent candidate.
/// Ties break toward the group containing the earliest sample index.
pub fn select_majority(samples: &[String], none_literals: &[String]) -> Option<MajorityOutcome> {
    if samples.is_empty() {
        return None;
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, sample) in samples.iter().enumerate() {
        groups
            .entry(normalize_answer(sample))
            .or_default()
            .push(index);
    }
    let (normalized_text, sample_indices) = groups
        .into_iter()
        .max_by(|a, b| {
            // Larger frequency wins; on a tie the smaller earliest index wins.
            (a.1.len(), std::cmp::Reverse(a.1[0])).cmp(&(b.1.len(), std::cmp::Reverse(b.1[0])))
        })
        .expect("samples is non-empty");
    let raw_text = samples[sample_indices[0]].clone();
    let candidate = AnswerCandidate {
        frequency: sample_indices.len(),
        raw_text,
        normalized_text,
        sample_indices,
    };
    Some(if is_none_literal(&candidate.raw_text, none_literals) {
        MajorityOutcome::None(candidate)
    } else {
        MajorityOutcome::Answer(candidate)
    })
}

pub fn default_none_literals() -> Vec<String> {
    vec!["none".into(), "[none]".into(), "".into()]
}
