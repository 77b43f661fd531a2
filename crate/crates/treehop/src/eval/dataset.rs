//! LongBench-style dataset loading.
//!
//! One JSON object per line with at least `input` (the question) and
//! `answers` (non-empty gold list); `context` carries the sample's passages
//! (see the corpus module for the byte-exact passage delimiter) and `_id`
//! names the sample.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::{split_passages, Passage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub sample_id: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub context_passages: Vec<Passage>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<EvalSample>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (number, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = |message: String| Error::Dataset {
            path: path.to_path_buf(),
            line: number + 1,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| record(format!("invalid JSON: {e}")))?;
        let question = value
            .get("input")
            .and_then(|v| v.as_str())
            .ok_or_else(|| record("missing `input` field".into()))?
            .to_string();
        if question.trim().is_empty() {
            return Err(record("empty question".into()));
        }
        let gold_answers: Vec<String> = value
            .get("answers")
            .and_then(|v| v.as_array())
            .ok_or_else(|| record("missing `answers` list".into()))?
            .iter()
            .map(|a| {
                a.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| record("non-string answer".into()))
            })
            .collect::<Result<_>>()?;
        if gold_answers.is_empty() || gold_answers.iter().any(|a| a.trim().is_empty()) {
            return Err(record("answers must be non-empty".into()));
        }
        let context_passages = value
            .get("context")
            .and_then(|v| v.as_str())
            .map(split_passages)
            .unwrap_or_default();
        let sample_id = value
            .get("_id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("sample{}", number + 1));
        samples.push(EvalSample {
            sample_id,
            question,
            gold_answers,
            context_passages,
        });
    }
    if samples.is_empty() {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            line: 0,
            message: "dataset is empty".into(),
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_fixture_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"_id\": \"a\", \"input\": \"Where?\", \"answers\": [\"Vienna\"], \"context\": \"Passage 1:\\nT\\nbody\"}\n",
                "{\"input\": \"Who?\", \"answers\": [\"Salten\", \"Felix Salten\"]}\n",
            ),
        )
        .unwrap();
        let samples = load_dataset(&path).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].sample_id, "a");
        assert_eq!(samples[0].context_passages.len(), 1);
        assert_eq!(samples[1].sample_id, "sample2");
        assert_eq!(samples[1].gold_answers.len(), 2);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(&path, "\n").unwrap();
        assert!(load_dataset(&path).is_err());
    }

    #[test]
    fn malformed_record_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(
            &path,
            "{\"input\": \"ok?\", \"answers\": [\"x\"]}\n{\"input\": \"bad\"}\n",
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(err.to_string().contains("answers"));
    }
}
