//! Tolerant parsers for structured model output and placeholder utilities.
//!
//! The analysis and decomposition prompts ask for key-value lines
//! (`CORE_QUERY:`, `KNOWN:`, `UNKNOWN:`, `PATTERN:`, `CHILD:`). Parsing is
//! forgiving about case, surrounding whitespace, and bullet noise; a failed
//! parse triggers one re-ask upstream before becoming an error.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::decompose::tree::Pattern;
use crate::error::{Error, Result};

/// The three analysis features extracted from a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionAnalysis {
    /// The fundamental information being sought, possibly with informal
    /// placeholder slots (`X`) standing in for unknown entities.
    pub core_query: String,
    /// `(entity, constraint)` pairs explicitly mentioned in the question.
    pub known_entities: Vec<(String, String)>,
    /// Entities that must be discovered through retrieval first.
    pub unknown_entities: Vec<String>,
}

impl QuestionAnalysis {
    /// Single-hop analysis: the question is its own core query.
    pub fn single_hop(question: &str) -> Self {
        QuestionAnalysis {
            core_query: question.to_string(),
            known_entities: Vec::new(),
            unknown_entities: Vec::new(),
        }
    }

    pub fn known_summary(&self) -> String {
        if self.known_entities.is_empty() {
            return "none".into();
        }
        self.known_entities
            .iter()
            .map(|(entity, constraint)| {
                if constraint.is_empty() {
                    entity.clone()
                } else {
                    format!("{entity} ({constraint})")
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn unknown_summary(&self) -> String {
        if self.unknown_entities.is_empty() {
            return "none".into();
        }
        self.unknown_entities.join("; ")
    }
}

fn strip_bullets(line: &str) -> &str {
    let trimmed = line.trim();
    let trimmed = trimmed.trim_start_matches(['-', '*', '•']).trim_start();
    // Numbered prefixes like "1." or "2)".
    static NUMBERED: OnceLock<Regex> = OnceLock::new();
    let re = NUMBERED.get_or_init(|| Regex::new(r"^\d+[.)]\s*").unwrap());
    match re.find(trimmed) {
        Some(m) => &trimmed[m.end()..],
        None => trimmed,
    }
}

fn key_value(line: &str, key: &str) -> Option<String> {
    let stripped = strip_bullets(line);
    let lower = stripped.to_lowercase();
    let prefix = format!("{}:", key.to_lowercase());
    if lower.starts_with(&prefix) {
        Some(stripped[prefix.len()..].trim().to_string())
    } else {
        None
    }
}

fn is_none_marker(value: &str) -> bool {
    matches!(value.trim().to_lowercase().as_str(), "none" | "-" | "")
}

/// Parse the analysis response format.
pub fn parse_analysis(text: &str) -> Result<QuestionAnalysis> {
    let mut core_query = None;
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for line in text.lines() {
        if let Some(value) = key_value(line, "core_query") {
            if !value.is_empty() {
                core_query = Some(value);
            }
        } else if let Some(value) = key_value(line, "known") {
            if !is_none_marker(&value) {
                let (entity, constraint) = match value.split_once('|') {
                    Some((e, c)) => (e.trim().to_string(), c.trim().to_string()),
                    None => (value.trim().to_string(), String::new()),
                };
                if !entity.is_empty() {
                    known.push((entity, constraint));
                }
            }
        } else if let Some(value) = key_value(line, "unknown") {
            if !is_none_marker(&value) {
                unknown.push(value);
            }
        }
    }
    let core_query =
        core_query.ok_or_else(|| Error::Unparseable("analysis has no CORE_QUERY line".into()))?;
    Ok(QuestionAnalysis {
        core_query,
        known_entities: known,
        unknown_entities: unknown,
    })
}

/// Positional placeholder written by the decomposition model: `Q1`, `Q2`, ...
/// referring to earlier sub-questions of the same split.
static PLACEHOLDER: OnceLock<Regex> = OnceLock::new();

fn placeholder_re() -> &'static Regex {
    PLACEHOLDER.get_or_init(|| Regex::new(r"\[answer from ([QN]\d+)\]").unwrap())
}

/// All placeholder references (`Q1` / `N3` style tokens) in a template.
pub fn placeholder_refs(template: &str) -> Vec<String> {
    placeholder_re()
        .captures_iter(template)
        .map(|cap| cap[1].to_string())
        .collect()
}

pub fn has_placeholders(template: &str) -> bool {
    placeholder_re().is_match(template)
}

/// Replace each `[answer from K]` with `replace(K)`.
pub fn map_placeholders(
    template: &str,
    mut replace: impl FnMut(&str) -> Result<String>,
) -> Result<String> {
    let mut out = String::new();
    let mut last = 0;
    for cap in placeholder_re().captures_iter(template) {
        let whole = cap.get(0).unwrap();
        out.push_str(&template[last..whole.start()]);
        out.push_str(&replace(&cap[1])?);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

/// Parse the decomposition response format and validate its structure:
/// direct has no children, splits have at least two, parallel children carry
/// no placeholders, sequential placeholders reference only earlier siblings
/// by position (`Q1`, ...).
pub fn parse_decomposition(text: &str) -> Result<(Pattern, Vec<String>)> {
    let mut pattern = None;
    let mut children = Vec::new();
    for line in text.lines() {
        if let Some(value) = key_value(line, "pattern") {
            let value = value.to_lowercase();
            pattern = Some(if value.contains("sequential") {
                Pattern::Sequential
            } else if value.contains("parallel") {
                Pattern::Parallel
            } else if value.contains("direct") {
                Pattern::Direct
            } else {
                return Err(Error::Unparseable(format!(
                    "unrecognized pattern `{value}`"
                )));
            });
        } else if let Some(value) = key_value(line, "child") {
            if !value.is_empty() {
                children.push(value);
            }
        }
    }
    let pattern =
        pattern.ok_or_else(|| Error::Unparseable("decomposition has no PATTERN line".into()))?;
    match pattern {
        Pattern::Direct => {
            if !children.is_empty() {
                return Err(Error::Unparseable(
                    "direct decomposition must not list children".into(),
                ));
            }
        }
        Pattern::Parallel | Pattern::Sequential => {
            if children.len() < 2 {
                return Err(Error::Unparseable(format!(
                    "{pattern} decomposition needs at least two children, got {}",
                    children.len()
                )));
            }
        }
    }
    for (position, child) in children.iter().enumerate() {
        let refs = placeholder_refs(child);
        if pattern == Pattern::Parallel && !refs.is_empty() {
            return Err(Error::Unparseable(format!(
                "parallel child {} must not contain placeholders",
                position + 1
            )));
        }
        for reference in refs {
            let index: usize = reference
                .strip_prefix('Q')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| {
                    Error::Unparseable(format!(
                        "placeholder `{reference}` must use positional Q-references"
                    ))
                })?;
            if index == 0 || index > position {
                return Err(Error::Unparseable(format!(
                    "child {} references Q{index}, which is not an earlier sibling",
                    position + 1
                )));
            }
        }
    }
    Ok((pattern, children))
}

/// Parse a yes/no support judgment. `None` means unparseable; the caller
/// defaults to supported and logs a warning event.
pub fn parse_support(text: &str) -> Option<bool> {
    let trimmed = text
        .trim()
        .trim_matches(['"', '\'', '.', '!'])
        .to_lowercase();
    if trimmed.starts_with("yes") {
        Some(true)
    } else if trimmed.starts_with("no") {
        Some(false)
    } else {
        None
    }
}

/// Parse rewrite variants: one per line, bullets and numbering stripped,
/// empties dropped.
pub fn parse_rewrites(text: &str) -> Vec<String> {
    text.lines()
        .map(strip_bullets)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}
