//! Ordered record of everything that happens while solving one question.
//!
//! A trace is the audit artifact that makes solves replayable: one event per
//! engine action, in order, serialized as JSON Lines (header line, event
//! lines, final line). Payloads never include timestamps or cache state, so
//! two runs over the same scripted backend produce byte-identical files.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Identifier of one tree node. The root is `N0`; every other node is
/// numbered in depth-first discovery order, `N1`, `N2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('N')
            .and_then(|digits| digits.parse::<u32>().ok())
            .map(NodeId)
            .ok_or_else(|| Error::InvalidTree(format!("bad node id `{s}`")))
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Analyze,
    Decompose,
    ConsensusPick,
    Retrieve,
    LeafAnswer,
    Substitute,
    NoneConvert,
    SupportCheck,
    Rewrite,
    Aggregate,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<NodeId>,
    pub payload: serde_json::Value,
}

impl TraceEvent {
    pub fn new(kind: EventKind, node: Option<NodeId>, payload: serde_json::Value) -> Self {
        TraceEvent {
            kind,
            node,
            payload,
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Answered,
    /// All rounds exhausted; the answer is the best surviving intermediate.
    BestEffort,
    Unanswered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub question: String,
    pub template_version: String,
    pub events: Vec<TraceEvent>,
    pub final_answer: Option<String>,
    pub status: SolveStatus,
    pub rounds_used: u32,
}

/// One entry of the condensed reasoning view: the solve-side actions that
/// correspond to printed reasoning chains (leaf determinations, placeholder
/// substitutions, non-None leaf answers, aggregations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub kind: EventKind,
    pub node: Option<NodeId>,
    pub summary: String,
}

impl SolveTrace {
    pub fn new(question: impl Into<String>, template_version: impl Into<String>) -> Self {
        SolveTrace {
            question: question.into(),
            template_version: template_version.into(),
            events: Vec::new(),
            final_answer: None,
            status: SolveStatus::Unanswered,
            rounds_used: 0,
        }
    }

    pub fn push(&mut self, kind: EventKind, node: Option<NodeId>, payload: serde_json::Value) {
        self.events.push(TraceEvent::new(kind, node, payload));
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Condense the raw event log into reasoning steps.
    pub fn reasoning_steps(&self) -> Vec<ReasoningStep> {
        let mut steps = Vec::new();
        for event in &self.events {
            let node_name = event.node.map(|n| n.to_string()).unwrap_or_default();
            let answer = event
                .payload
                .get("answer")
                .and_then(|a| a.as_str())
                .unwrap_or("");
            let is_none = event
                .payload
                .get("none")
                .and_then(|v| v.as_bool())
                .unwrap_or(false);
            let summary = match event.kind {
                EventKind::Decompose
                    if event.payload.get("outcome").and_then(|o| o.as_str()) == Some("direct") =>
                {
                    format!("Attempt to decompose {node_name} -> leaf node")
                }
                EventKind::Substitute => {
                    let resolved = event
                        .payload
                        .get("resolved")
                        .and_then(|r| r.as_str())
                        .unwrap_or("");
                    format!("{node_name} becomes: {resolved}")
                }
                EventKind::LeafAnswer if !is_none => {
                    format!("Retrieve answer for {node_name} -> {answer}")
                }
                EventKind::Aggregate if !is_none => {
                    format!("Aggregate children of {node_name} -> {answer}")
                }
                _ => continue,
            };
            steps.push(ReasoningStep {
                kind: event.kind,
                node: event.node,
                summary,
            });
        }
        steps
    }

    /// Write the trace as JSON Lines: a header line, one line per event, and
    /// a final line with the outcome and the condensed reasoning steps.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let header = serde_json::json!({
            "record": "header",
            "schema_version": TRACE_SCHEMA_VERSION,
            "question": self.question,
            "template_version": self.template_version,
        });
        out.push_str(&serde_json::to_string(&header)?);
        out.push('\n');
        for (seq, event) in self.events.iter().enumerate() {
            let line = serde_json::json!({
                "record": "event",
                "seq": seq,
                "kind": event.kind,
                "node": event.node.map(|n| n.to_string()),
                "payload": event.payload,
            });
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        let final_line = serde_json::json!({
            "record": "final",
            "answer": self.final_answer,
            "status": self.status,
            "rounds_used": self.rounds_used,
            "reasoning_steps": self.reasoning_steps().iter().map(|s| s.summary.clone()).collect::<Vec<_>>(),
        });
        out.push_str(&serde_json::to_string(&final_line)?);
        out.push('\n');
        Ok(out)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    /// Parse a trace back from its JSON Lines form.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut question = String::new();
        let mut template_version = String::new();
        let mut events = Vec::new();
        let mut final_answer = None;
        let mut status = SolveStatus::Unanswered;
        let mut rounds_used = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let value: serde_json::Value = serde_json::from_str(line)?;
            match value.get("record").and_then(|r| r.as_str()) {
                Some("header") => {
                    question = value
                        .get("question")
                        .and_then(|q| q.as_str())
                        .unwrap_or_default()
                        .to_string();
                    template_version = value
                        .get("template_version")
                        .and_then(|v| v.as_str())
                        .unwrap_or_default()
                        .to_string();
                }
                Some("event") => {
                    let kind: EventKind =
                        serde_json::from_value(value.get("kind").cloned().unwrap_or_default())?;
                    let node = match value.get("node").and_then(|n| n.as_str()) {
                        Some(s) => Some(s.parse()?),
                        None => None,
                    };
                    events.push(TraceEvent::new(
                        kind,
                        node,
                        value.get("payload").cloned().unwrap_or_default(),
                    ));
                }
                Some("final") => {
                    final_answer = value
                        .get("answer")
                        .and_then(|a| a.as_str())
                        .map(str::to_string);
                    status =
                        serde_json::from_value(value.get("status").cloned().unwrap_or_default())?;
                    rounds_used = value
                        .get("rounds_used")
                        .and_then(|r| r.as_u64())
                        .unwrap_or(0) as u32;
                }
                _ => {
                    return Err(Error::BadResponse("unrecognized trace record".into()));
                }
            }
        }
        Ok(SolveTrace {
            question,
            template_version,
            events,
            final_answer,
            status,
            rounds_used,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn node_ids_format_and_parse() {
        assert_eq!(NodeId(3).to_string(), "N3");
        assert_eq!("N12".parse::<NodeId>().unwrap(), NodeId(12));
        assert!("X1".parse::<NodeId>().is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut trace = SolveTrace::new("q", "v1");
        trace.push(
            EventKind::LeafAnswer,
            Some(NodeId(2)),
            json!({"answer": "North America", "none": false}),
        );
        trace.push(
            EventKind::NoneConvert,
            Some(NodeId(2)),
            json!({"dropped": ["N3", "N4"]}),
        );
        trace.final_answer = Some("Sebastian Cabot".into());
        trace.status = SolveStatus::Answered;
        trace.rounds_used = 1;
        let text = trace.to_jsonl().unwrap();
        let parsed = SolveTrace::from_jsonl(&text).unwrap();
        assert_eq!(parsed, trace);
    }

    #[test]
    fn reasoning_steps_filter_and_order() {
        let mut trace = SolveTrace::new("q", "v1");
        trace.push(EventKind::Analyze, Some(NodeId::ROOT), json!({}));
        trace.push(
            EventKind::Decompose,
            Some(NodeId::ROOT),
            json!({"outcome": "expanded"}),
        );
        trace.push(EventKind::Retrieve, Some(NodeId(1)), json!({}));
        trace.push(
            EventKind::LeafAnswer,
            Some(NodeId(1)),
            json!({"answer": "Felix Salten", "none": false}),
        );
        trace.push(
            EventKind::LeafAnswer,
            Some(NodeId(3)),
            json!({"answer": "[none]", "none": true}),
        );
        trace.push(
            EventKind::Substitute,
            Some(NodeId(2)),
            json!({"resolved": "home city of Felix Salten"}),
        );
        trace.push(
            EventKind::Decompose,
            Some(NodeId(2)),
            json!({"outcome": "direct"}),
        );
        trace.push(
            EventKind::Aggregate,
            Some(NodeId::ROOT),
            json!({"answer": "Vienna", "none": false}),
        );
        let steps = trace.reasoning_steps();
        let kinds: Vec<EventKind> = steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::LeafAnswer,
                EventKind::Substitute,
                EventKind::Decompose,
                EventKind::Aggregate
            ]
        );
        assert!(steps[0].summary.contains("Felix Salten"));
    }
}
