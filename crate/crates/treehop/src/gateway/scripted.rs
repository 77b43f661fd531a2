//! Deterministic scripted backend for tests and replay.
//!
//! An oracle is a list of entries matched against the canonicalized request:
//! exact-key entries are tried first, then `contains` entries in file order.
//! In strict mode an unmatched request is an error. Non-strict oracles fall
//! back to a hashed unit embedding, a token-overlap rerank score, and a fixed
//! completion text, which keeps full-engine fixtures small: only the
//! completions that matter need entries.
//!
//! Fixture files are JSON Lines: an optional `{"kind":"header",...}` first
//! line, then one `{"kind":"entry",...}` per line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gateway::{Backend, CompletionRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Contains,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptedEntry {
    pub capability: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<u32>,
    #[serde(rename = "match")]
    pub match_mode: MatchMode,
    pub key: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vector: Vec<f32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptedHeader {
    #[serde(default = "default_true")]
    strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embed_fallback_dim: Option<usize>,
    #[serde(default)]
    rerank_fallback_overlap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    complete_fallback: Option<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum FixtureLine {
    Header(ScriptedHeader),
    Entry(ScriptedEntry),
}

/// Fixture-driven [`Backend`]. Matching is pure, so replaying the same
/// request sequence yields byte-identical responses.
#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    pub strict: bool,
    entries: Vec<ScriptedEntry>,
    embed_fallback_dim: Option<usize>,
    rerank_fallback_overlap: bool,
    complete_fallback: Option<String>,
    label: String,
}

impl Default for ScriptedOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl ScriptedOracle {
    pub fn new() -> Self {
        ScriptedOracle {
            strict: true,
            entries: Vec::new(),
            embed_fallback_dim: None,
            rerank_fallback_overlap: false,
            complete_fallback: None,
            label: "inline".to_string(),
        }
    }

    /// Non-strict oracle with all fallbacks enabled: hashed embeddings of
    /// `dim` dimensions, overlap reranking, and "None" completions.
    pub fn permissive(dim: usize) -> Self {
        let mut oracle = ScriptedOracle::new();
        oracle.strict = false;
        oracle.embed_fallback_dim = Some(dim);
        oracle.rerank_fallback_overlap = true;
        oracle.complete_fallback = Some("None".to_string());
        oracle
    }

    pub fn set_embed_fallback_hashed(&mut self, dim: usize) {
        self.embed_fallback_dim = Some(dim);
    }

    pub fn set_rerank_fallback_overlap(&mut self) {
        self.rerank_fallback_overlap = true;
    }

    pub fn set_complete_fallback(&mut self, text: impl Into<String>) {
        self.complete_fallback = Some(text.into());
    }

    pub fn push(&mut self, entry: ScriptedEntry) {
        self.entries.push(entry);
    }

    pub fn complete_exact<S: Into<String>, I: IntoIterator<Item = S>>(
        &mut self,
        template: &str,
        key: &str,
        responses: I,
    ) {
        self.push_complete(template, key, MatchMode::Exact, None, responses);
    }

    pub fn complete_contains<S: Into<String>, I: IntoIterator<Item = S>>(
        &mut self,
        template: &str,
        key: &str,
        responses: I,
    ) {
        self.push_complete(template, key, MatchMode::Contains, None, responses);
    }

    pub fn complete_variant<S: Into<String>, I: IntoIterator<Item = S>>(
        &mut self,
        template: &str,
        key: &str,
        variant: u32,
        responses: I,
    ) {
        self.push_complete(template, key, MatchMode::Contains, Some(variant), responses);
    }

    fn push_complete<S: Into<String>, I: IntoIterator<Item = S>>(
        &mut self,
        template: &str,
        key: &str,
        match_mode: MatchMode,
        variant: Option<u32>,
        responses: I,
    ) {
        self.entries.push(ScriptedEntry {
            capability: "complete".into(),
            template: Some(template.to_string()),
            variant,
            match_mode,
            key: key.to_string(),
            responses: responses.into_iter().map(Into::into).collect(),
            vector: Vec::new(),
            scores: Vec::new(),
        });
    }

    pub fn embed_exact<I: IntoIterator<Item = f32>>(&mut self, key: &str, vector: I) {
        self.entries.push(ScriptedEntry {
            capability: "embed".into(),
            template: None,
            variant: None,
            match_mode: MatchMode::Exact,
            key: key.to_string(),
            responses: Vec::new(),
            vector: vector.into_iter().collect(),
            scores: Vec::new(),
        });
    }

    pub fn rerank_contains<I: IntoIterator<Item = f32>>(&mut self, key: &str, scores: I) {
        self.entries.push(ScriptedEntry {
            capability: "rerank".into(),
            template: None,
            variant: None,
            match_mode: MatchMode::Contains,
            key: key.to_string(),
            responses: Vec::new(),
            vector: Vec::new(),
            scores: scores.into_iter().collect(),
        });
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut oracle = ScriptedOracle::new();
        oracle.label = path.display().to_string();
        for (number, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: FixtureLine = serde_json::from_str(line).map_err(|e| Error::Dataset {
                path: path.to_path_buf(),
                line: number + 1,
                message: format!("bad fixture line: {e}"),
            })?;
            match parsed {
                FixtureLine::Header(header) => {
                    oracle.strict = header.strict;
                    oracle.embed_fallback_dim = header.embed_fallback_dim;
                    oracle.rerank_fallback_overlap = header.rerank_fallback_overlap;
                    oracle.complete_fallback = header.complete_fallback;
                }
                FixtureLine::Entry(entry) => oracle.entries.push(entry),
            }
        }
        Ok(oracle)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let header = FixtureLine::Header(ScriptedHeader {
            strict: self.strict,
            embed_fallback_dim: self.embed_fallback_dim,
            rerank_fallback_overlap: self.rerank_fallback_overlap,
            complete_fallback: self.complete_fallback.clone(),
        });
        out.push_str(&serde_json::to_string(&header)?);
        out.push('\n');
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(&FixtureLine::Entry(entry.clone()))?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    fn matches(entry: &ScriptedEntry, target: &str) -> bool {
        match entry.match_mode {
            MatchMode::Exact => entry.key == target,
            MatchMode::Contains => target.contains(&entry.key),
        }
    }

    /// Exact entries first, then contains entries in insertion order.
    fn find(
        &self,
        capability: &str,
        target: &str,
        filter: impl Fn(&ScriptedEntry) -> bool,
    ) -> Option<&ScriptedEntry> {
        let candidates = || {
            self.entries
                .iter()
                .filter(|e| e.capability == capability && filter(e))
        };
        candidates()
            .find(|e| e.match_mode == MatchMode::Exact && Self::matches(e, target))
            .or_else(|| {
                candidates()
                    .find(|e| e.match_mode == MatchMode::Contains && Self::matches(e, target))
            })
    }

    fn miss(&self, fingerprint: String) -> Error {
        Error::ScriptedMiss { fingerprint }
    }
}

impl Backend for ScriptedOracle {
    fn id(&self) -> String {
        format!("scripted:{}", self.label)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<Vec<String>> {
        let n = request.params.sample_count as usize;
        let entry = self.find("complete", &request.prompt, |e| {
            e.template
                .as_deref()
                .is_none_or(|t| t == request.template_id)
                && e.variant.is_none_or(|v| v == request.variant)
        });
        let responses: Vec<String> = match entry {
            Some(entry) if !entry.responses.is_empty() => entry.responses.clone(),
            Some(_) => return Err(Error::BadResponse("entry has no responses".into())),
            None if self.strict => return Err(self.miss(request.fingerprint())),
            None => match &self.complete_fallback {
                Some(text) => vec![text.clone()],
                None => return Err(self.miss(request.fingerprint())),
            },
        };
        // Shorter lists cycle so a one-line fixture can serve n samples.
        Ok((0..n)
            .map(|i| responses[i % responses.len()].clone())
            .collect())
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        texts
            .iter()
            .map(|text| match self.find("embed", text, |_| true) {
                Some(entry) => Ok(entry.vector.clone()),
                None if self.strict => Err(self.miss(format!("embed\u{1f}{text}"))),
                None => match self.embed_fallback_dim {
                    Some(dim) => Ok(hashed_embedding(text, dim)),
                    None => Err(self.miss(format!("embed\u{1f}{text}"))),
                },
            })
            .collect()
    }

    fn rerank(&self, query: &str, passages: &[String]) -> Result<Vec<f32>> {
        match self.find("rerank", query, |_| true) {
            Some(entry) => {
                if entry.scores.len() != passages.len() {
                    return Err(Error::BadResponse(format!(
                        "scripted rerank entry has {} scores for {} passages",
                        entry.scores.len(),
                        passages.len()
                    )));
                }
                Ok(entry.scores.clone())
            }
            None if self.strict => Err(self.miss(format!("rerank\u{1f}{query}"))),
            None if self.rerank_fallback_overlap => {
                Ok(passages.iter().map(|p| overlap_score(query, p)).collect())
            }
            None => Err(self.miss(format!("rerank\u{1f}{query}"))),
        }
    }
}

/// Deterministic pseudo-random vector derived from the text bytes. The
/// gateway normalizes, so components only need a stable direction.
pub(crate) fn hashed_embedding(text: &str, dim: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(dim);
    let mut counter = 0u32;
    while out.len() < dim {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hasher.update(counter.to_le_bytes());
        let digest = hasher.finalize();
        for bytes in digest.chunks_exact(4) {
            if out.len() == dim {
                break;
            }
            let raw = u32::from_le_bytes(bytes.try_into().unwrap());
            out.push((raw as f32 / u32::MAX as f32) * 2.0 - 1.0);
        }
        counter += 1;
    }
    out
}

/// Fraction of distinct query tokens present in the passage.
fn overlap_score(query: &str, passage: &str) -> f32 {
    let query_tokens: Vec<String> = query
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if query_tokens.is_empty() {
        return 0.0;
    }
    let passage_lower = passage.to_lowercase();
    let passage_tokens: std::collections::HashSet<&str> =
        passage_lower.split_whitespace().collect();
    let mut seen = std::collections::HashSet::new();
    let hits = query_tokens
        .iter()
        .filter(|t| seen.insert(t.as_str()) && passage_tokens.contains(t.as_str()))
        .count();
    hits as f32 / query_tokens.len() as f32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_miss_is_an_error() {
        let oracle = ScriptedOracle::new();
        let err = oracle
            .complete(&CompletionRequest::new("answer", "unknown"))
            .unwrap_err();
        assert!(matches!(err, Error::ScriptedMiss { .. }));
    }

    #[test]
    fn exact_entries_beat_contains_entries() {
        let mut oracle = ScriptedOracle::new();
        oracle.complete_contains("answer", "question", ["broad"]);
        oracle.complete_exact("answer", "the question", ["narrow"]);
        let got = oracle
            .complete(&CompletionRequest::new("answer", "the question"))
            .unwrap();
        assert_eq!(got, vec!["narrow"]);
    }

    #[test]
    fn template_filter_discriminates() {
        let mut oracle = ScriptedOracle::new();
        oracle.complete_contains("analyze", "Vienna", ["analysis output"]);
        oracle.complete_contains("answer", "Vienna", ["Vienna"]);
        let got = oracle
            .complete(&CompletionRequest::new("answer", "about Vienna"))
            .unwrap();
        assert_eq!(got, vec!["Vienna"]);
    }

    #[test]
    fn short_response_lists_cycle() {
        let mut oracle = ScriptedOracle::new();
        oracle.complete_contains("answer", "q", ["Vienna"]);
        let mut request = CompletionRequest::new("answer", "q");
        request.params.sample_count = 5;
        let got = oracle.complete(&request).unwrap();
        assert_eq!(got.len(), 5);
        assert!(got.iter().all(|t| t == "Vienna"));
    }

    #[test]
    fn replay_is_byte_identical() {
        let mut oracle = ScriptedOracle::permissive(8);
        oracle.complete_contains("answer", "q", ["a", "b"]);
        let request = CompletionRequest::new("answer", "q about things");
        let first = oracle.complete(&request).unwrap();
        let second = oracle.complete(&request).unwrap();
        assert_eq!(first, second);
        let e1 = oracle.embed(&["some text".into()]).unwrap();
        let e2 = oracle.embed(&["some text".into()]).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn fixture_file_round_trip() {
        let mut oracle = ScriptedOracle::permissive(4);
        oracle.complete_contains("answer", "capital", ["Vienna"]);
        oracle.embed_exact("t", [1.0, 0.0]);
        oracle.rerank_contains("q", [0.5, 0.25]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.jsonl");
        oracle.save(&path).unwrap();
        let loaded = ScriptedOracle::from_path(&path).unwrap();
        assert!(!loaded.strict);
        let got = loaded
            .complete(&CompletionRequest::new("answer", "the capital?"))
            .unwrap();
        assert_eq!(got, vec!["Vienna"]);
        assert_eq!(loaded.embed(&["t".into()]).unwrap(), vec![vec![1.0, 0.0]]);
        assert_eq!(
            loaded.rerank("q", &["a".into(), "b".into()]).unwrap(),
            vec![0.5, 0.25]
        );
    }

    #[test]
    fn rerank_score_count_mismatch_errors() {
        let mut oracle = ScriptedOracle::new();
        oracle.rerank_contains("q", [0.5, 0.25]);
        assert!(oracle.rerank("q", &["only one".into()]).is_err());
    }

    #[test]
    fn hashed_embeddings_are_stable_and_distinct() {
        let a1 = hashed_embedding("alpha", 16);
        let a2 = hashed_embedding("alpha", 16);
        let b = hashed_embedding("beta", 16);
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
        assert_eq!(a1.len(), 16);
    }
}
