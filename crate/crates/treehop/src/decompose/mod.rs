//! Question structure analysis, candidate reasoning-tree generation, and
//! consensus-based tree selection.
//!
//! A question is analyzed into core query / known entities / unknown
//! entities, then recursively decomposed into a tree: children that carry
//! dependency placeholders are deferred (they cannot be decomposed until an
//! earlier sibling's answer resolves them), children at the depth bound are
//! capped, and everything else is analyzed and split again until a
//! decomposition comes back `direct`. Node ids are assigned in depth-first
//! discovery order, root `N0`.
//!
//! Several candidate trees are generated per question and the most frequent
//! `(depth, node count)` configuration wins; ties prefer fewer nodes, then
//! shallower trees, then the earliest candidate.

pub mod parse;
pub mod tree;

pub use parse::{
    has_placeholders, map_placeholders, parse_analysis, parse_decomposition, parse_rewrites,
    parse_support, placeholder_refs, QuestionAnalysis,
};
pub use tree::{LeafKind, NodeStatus, Pattern, ReasoningTree, TreeNode, TreeSignature};

use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, GenerationParams, ModelGateway};
use crate::prompt::TemplateStore;
use crate::trace::{EventKind, NodeId, TraceEvent};

const REASK_SUFFIX: &str =
    "\n\nYour previous reply was not in the required format. Reply again, following the required structure exactly.";

/// `(depth, node count)` signature of a tree, as a free function.
pub fn tree_signature(tree: &ReasoningTree) -> TreeSignature {
    tree.signature()
}

/// Pick the winning candidate index by signature frequency. Ties prefer the
/// smaller node count, then the smaller depth, then the earliest candidate;
/// the representative inside the winning group is its earliest member.
pub fn consensus_winner(signatures: &[TreeSignature]) -> Option<usize> {
    if signatures.is_empty() {
        return None;
    }
    let mut best: Option<(usize, TreeSignature, usize)> = None; // (freq, sig, first index)
    for (index, &signature) in signatures.iter().enumerate() {
        let freq = signatures.iter().filter(|&&s| s == signature).count();
        let candidate = (freq, signature, index);
        best = Some(match best {
            None => candidate,
            Some(current) => {
                let (cur_freq, cur_sig, cur_index) = current;
                let better = freq > cur_freq
                    || (freq == cur_freq
                        && (signature.node_count, signature.depth, index)
                            < (cur_sig.node_count, cur_sig.depth, cur_index));
                if better && signature != cur_sig {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    best.map(|(_, _, index)| index)
}

/// Outcome of one candidate generation, kept for reporting.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CandidateOutcome {
    pub signature: Option<TreeSignature>,
    pub error: Option<String>,
}

/// What the consensus round saw and chose.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConsensusReport {
    pub candidates: Vec<CandidateOutcome>,
    pub winner_index: usize,
    pub winner_signature: TreeSignature,
}

/// Runs the analysis and decomposition prompts.
pub struct Decomposer {
    gateway: Arc<ModelGateway>,
    templates: Arc<TemplateStore>,
    /// Sampling temperature for candidate generation. Must be positive on a
    /// live backend when more than one candidate is requested.
    pub temperature: f32,
    pub max_output_tokens: u32,
}

impl Decomposer {
    pub fn new(gateway: Arc<ModelGateway>, templates: Arc<TemplateStore>) -> Self {
        Decomposer {
            gateway,
            templates,
            temperature: 0.7,
            max_output_tokens: 1024,
        }
    }

    fn ask_once(
        &self,
        template: &str,
        slots: &[(&str, &str)],
        variant: u32,
        reask: bool,
    ) -> Result<String> {
        let mut prompt = self.templates.render(template, slots)?;
        if reask {
            prompt.push_str(REASK_SUFFIX);
        }
        let request = CompletionRequest::new(template, prompt)
            .with_variant(variant)
            .with_params(GenerationParams {
                temperature: self.temperature,
                max_output_tokens: self.max_output_tokens,
                sample_count: 1,
                stop_sequences: Vec::new(),
            });
        Ok(self.gateway.complete(&request)?.texts.remove(0))
    }

    /// Ask, parse, and re-ask once on parse failure.
    fn ask_parsed<T>(
        &self,
        template: &str,
        slots: &[(&str, &str)],
        variant: u32,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<T> {
        let first = self.ask_once(template, slots, variant, false)?;
        match parse(&first) {
            Ok(value) => Ok(value),
            Err(_) => {
                let second = self.ask_once(template, slots, variant, true)?;
                parse(&second)
            }
        }
    }

    /// One analysis call; parse failure triggers one re-ask before erroring.
    pub fn analyze_question(&self, question: &str) -> Result<QuestionAnalysis> {
        self.analyze_internal(question, 0)
    }

    pub(crate) fn analyze_internal(
        &self,
        question: &str,
        variant: u32,
    ) -> Result<QuestionAnalysis> {
        if question.trim().is_empty() {
            return Err(Error::InvalidParams("question must be non-empty".into()));
        }
        self.ask_parsed("analyze", &[("question", question)], variant, |text| {
            parse_analysis(text)
        })
    }

    /// One decomposition call over a question and its analysis.
    pub fn decompose_once(
        &self,
        question: &str,
        analysis: &QuestionAnalysis,
    ) -> Result<(Pattern, Vec<String>)> {
        self.decompose_internal(question, analysis, 0)
    }

    pub(crate) fn decompose_internal(
        &self,
        question: &str,
        analysis: &QuestionAnalysis,
        variant: u32,
    ) -> Result<(Pattern, Vec<String>)> {
        if question.trim().is_empty() {
            return Err(Error::InvalidParams("question must be non-empty".into()));
        }
        let slots = [
            ("question", question),
            ("core_query", analysis.core_query.as_str()),
            ("known_entities", &analysis.known_summary()),
            ("unknown_entities", &analysis.unknown_summary()),
        ];
        self.ask_parsed("decompose", &slots, variant, parse_decomposition)
    }

    /// Recursively decompose `question` down to `max_depth`. Analyze and
    /// decompose events for the build are appended to `events`.
    pub fn build_tree(
        &self,
        question: &str,
        max_depth: usize,
        variant: u32,
        events: &mut Vec<TraceEvent>,
    ) -> Result<ReasoningTree> {
        if max_depth < 1 {
            return Err(Error::InvalidParams("max_depth must be >= 1".into()));
        }
        let mut tree = ReasoningTree::new(question, max_depth);
        self.expand_node(&mut tree, NodeId::ROOT, 1, variant, events)?;
        tree.validate()?;
        Ok(tree)
    }

    /// Analyze + decompose one node and, when it splits, create its children
    /// depth-first (each child's subtree is fully built before the next
    /// sibling is allocated — that is what makes ids line up with printed
    /// trees). Positional `Q*` placeholders are rewritten to node ids.
    pub(crate) fn expand_node(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        depth: usize,
        variant: u32,
        events: &mut Vec<TraceEvent>,
    ) -> Result<()> {
        if depth >= tree.max_depth() {
            tree.node_mut(node_id)?.leaf_kind = Some(LeafKind::DepthCapped);
            return Ok(());
        }
        let template = tree.node(node_id)?.question_template.clone();
        if has_placeholders(&template) {
            tree.node_mut(node_id)?.leaf_kind = Some(LeafKind::Deferred);
            return Ok(());
        }
        let analysis = self.analyze_internal(&template, variant)?;
        events.push(TraceEvent::new(
            EventKind::Analyze,
            Some(node_id),
            json!({
                "question": template,
                "core_query": analysis.core_query,
                "known_entities": analysis.known_entities,
                "unknown_entities": analysis.unknown_entities,
            }),
        ));
        let (pattern, child_templates) = self.decompose_internal(&template, &analysis, variant)?;
        events.push(TraceEvent::new(
            EventKind::Decompose,
            Some(node_id),
            json!({
                "question": template,
                "pattern": pattern,
                "children": child_templates,
                "outcome": if pattern == Pattern::Direct { "direct" } else { "expanded" },
                "phase": "build",
            }),
        ));
        if pattern == Pattern::Direct {
            tree.node_mut(node_id)?.leaf_kind = Some(LeafKind::Confirmed);
            return Ok(());
        }
        {
            let node = tree.node_mut(node_id)?;
            node.pattern = pattern;
            node.leaf_kind = None;
        }
        let mut sibling_ids: Vec<NodeId> = Vec::new();
        for child_template in child_templates {
            let child_id = tree.alloc();
            let rewritten = map_placeholders(&child_template, |reference| {
                let position: usize = reference
                    .strip_prefix('Q')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| {
                        Error::Unparseable(format!("unexpected placeholder `{reference}`"))
                    })?;
                Ok(format!("[answer from {}]", sibling_ids[position - 1]))
            })?;
            tree.insert(TreeNode::leaf(child_id, rewritten, LeafKind::Deferred));
            tree.node_mut(node_id)?.children.push(child_id);
            sibling_ids.push(child_id);
            self.expand_node(tree, child_id, depth + 1, variant, events)?;
        }
        Ok(())
    }

    /// Generate `candidate_count` trees and keep a representative of the most
    /// frequent signature. Individual candidate failures are tolerated; if
    /// every candidate fails the question needs reformulation.
    pub fn select_consensus_tree(
        &self,
        question: &str,
        candidate_count: usize,
        max_depth: usize,
        variant_base: u32,
        events: &mut Vec<TraceEvent>,
    ) -> Result<(ReasoningTree, ConsensusReport)> {
        if candidate_count < 1 {
            return Err(Error::InvalidParams("candidate_count must be >= 1".into()));
        }
        if self.gateway.is_live() && candidate_count > 1 && self.temperature <= 0.0 {
            return Err(Error::InvalidParams(
                "consensus candidates need temperature > 0 on a live backend".into(),
            ));
        }
        let mut candidates: Vec<(ReasoningTree, Vec<TraceEvent>)> = Vec::new();
        let mut outcomes: Vec<CandidateOutcome> = Vec::new();
        let mut kept_signatures: Vec<TreeSignature> = Vec::new();
        for i in 0..candidate_count {
            let mut candidate_events = Vec::new();
            match self.build_tree(
                question,
                max_depth,
                variant_base + i as u32,
                &mut candidate_events,
            ) {
                Ok(candidate) => {
                    outcomes.push(CandidateOutcome {
                        signature: Some(candidate.signature()),
                        error: None,
                    });
                    kept_signatures.push(candidate.signature());
                    candidates.push((candidate, candidate_events));
                }
                Err(e) => outcomes.push(CandidateOutcome {
                    signature: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        let Some(winner_in_kept) = consensus_winner(&kept_signatures) else {
            return Err(Error::ConsensusExhausted);
        };
        let (winner, winner_events) = candidates.swap_remove(winner_in_kept);
        // Map the index among successful candidates back to the full list.
        let winner_index = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.signature.is_some())
            .nth(winner_in_kept)
            .map(|(i, _)| i)
            .unwrap();
        let report = ConsensusReport {
            candidates: outcomes,
            winner_index,
            winner_signature: winner.signature(),
        };
        events.extend(winner_events);
        events.push(TraceEvent::new(
            EventKind::ConsensusPick,
            Some(NodeId::ROOT),
            json!({
                "candidates": report.candidates,
                "winner_index": report.winner_index,
                "winner_signature": report.winner_signature,
            }),
        ));
        Ok((winner, report))
    }
}
