//! Bottom-up tree solving.
//!
//! A tree is solved post-order: every surviving child is resolved before its
//! parent. Leaves are answered by retrieval plus rejection-sampled
//! generation; a leaf that comes back None is retried over query rewrites.
//! Nones that survive rewriting restructure the tree: under a sequential
//! parent the parent collapses into a fresh leaf (its later children are
//! unresolvable anyway), under a parallel parent a non-leaf child collapses
//! first and is retried directly. Parents whose children all answered are
//! aggregated; if the whole tree still yields None the question is
//! reformulated and decomposition starts over, up to `max_rounds`.

pub mod sampling;

pub use sampling::{
    default_none_literals, is_none_literal, select_majority, AnswerCandidate, MajorityOutcome,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::decompose::{
    has_placeholders, map_placeholders, parse_rewrites, parse_support, Decomposer, LeafKind,
    NodeStatus, Pattern, ReasoningTree, TreeNode,
};
use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, GenerationParams, ModelGateway};
use crate::prompt::TemplateStore;
use crate::retrieval::{ContextBundle, Retriever};
use crate::trace::{EventKind, NodeId, SolveStatus, SolveTrace};

/// Solver knobs. Defaults: 5 answer samples, up to 3 refinement rounds,
/// max tree depth 4, 3 rewrite attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub sample_count: u32,
    pub max_rounds: u32,
    pub max_depth: usize,
    pub rewrite_attempts: u32,
    pub none_literals: Vec<String>,
    /// Temperature for answer sampling and rewriting; sampling needs
    /// diversity, so this must stay positive on live backends.
    pub answer_temperature: f32,
    /// Temperature for yes/no support checks and aggregation.
    pub judgment_temperature: f32,
    pub max_answer_tokens: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sample_count: 5,
            max_rounds: 3,
            max_depth: 4,
            rewrite_attempts: 3,
            none_literals: default_none_literals(),
            answer_temperature: 0.7,
            judgment_temperature: 0.0,
            max_answer_tokens: 256,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 1
            || self.max_rounds < 1
            || self.max_depth < 1
            || self.rewrite_attempts < 1
        {
            return Err(Error::Config("solver counts must all be >= 1".into()));
        }
        Ok(())
    }
}

/// Meaning-preserving paraphrases of a query, the original excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteSet {
    pub original: String,
    pub variants: Vec<String>,
}

/// Replace every `[answer from Nk]` in the node's template with the bound
/// answer. Every referenced node must have an entry.
pub fn substitute_placeholders(
    node: &TreeNode,
    answers: &BTreeMap<NodeId, String>,
) -> Result<String> {
    map_placeholders(&node.question_template, |reference| {
        let id: NodeId = reference.parse()?;
        answers
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::UnboundPlaceholder {
                placeholder: format!("[answer from {id}]"),
            })
    })
}

/// Upper bound on gateway operations (completions + embeds + reranks) for
/// one `answer_question` call, as a function of the largest tree the solve
/// can touch.
///
/// Per round: consensus building issues at most `4 * candidate_count *
/// max_tree_nodes` completions (analyze + decompose, each re-asked at most
/// once, for fewer than `max_tree_nodes` nodes per candidate). Solving
/// touches each node at most once with at most one deferred decomposition
/// attempt (4 completions with re-asks), `rewrite_attempts + 1` answer
/// attempts of 3 operations each (embed + rerank + completion), one rewrite
/// call, one support check, and one aggregation. One reformulation closes
/// the round.
pub fn call_bound(config: &SolverConfig, candidate_count: usize, max_tree_nodes: usize) -> u64 {
    let rounds = config.max_rounds as u64;
    let c = candidate_count as u64;
    let n = max_tree_nodes as u64;
    let w = config.rewrite_attempts as u64;
    rounds * (4 * c * n + n * (3 * (w + 1) + 7) + 1)
}

/// Drives one question through decomposition, retrieval, and aggregation.
pub struct Solver {
    gateway: Arc<ModelGateway>,
    retriever: Arc<Retriever>,
    templates: Arc<TemplateStore>,
    decomposer: Decomposer,
    config: SolverConfig,
    candidate_count: usize,
}

impl Solver {
    pub fn new(
        gateway: Arc<ModelGateway>,
        retriever: Arc<Retriever>,
        templates: Arc<TemplateStore>,
        config: SolverConfig,
        candidate_count: usize,
    ) -> Result<Self> {
        config.validate()?;
        if candidate_count < 1 {
            return Err(Error::Config("candidate_count must be >= 1".into()));
        }
        let mut decomposer = Decomposer::new(gateway.clone(), templates.clone());
        decomposer.temperature = config.answer_temperature;
        Ok(Solver {
            gateway,
            retriever,
            templates,
            decomposer,
            config,
            candidate_count,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.decomposer
    }

    fn complete(
        &self,
        template: &str,
        slots: &[(&str, &str)],
        variant: u32,
        temperature: f32,
        sample_count: u32,
    ) -> Result<Vec<String>> {
        let prompt = self.templates.render(template, slots)?;
        let request = CompletionRequest::new(template, prompt)
            .with_variant(variant)
            .with_params(GenerationParams {
                temperature,
                max_output_tokens: self.config.max_answer_tokens,
                sample_count,
                stop_sequences: Vec::new(),
            });
        Ok(self.gateway.complete(&request)?.texts)
    }

    /// Run the retrieval pipeline for one (fully substituted) question.
    pub fn retrieve_for(&self, question: &str) -> Result<ContextBundle> {
        if question.trim().is_empty() {
            return Err(Error::InvalidParams("question must be non-empty".into()));
        }
        self.retriever.retrieve(question)
    }

    fn sample_answers(
        &self,
        question: &str,
        context: &ContextBundle,
        variant: u32,
    ) -> Result<Vec<String>> {
        let rendered;
        let context_text = if context.is_empty() {
            "(no evidence retrieved)"
        } else {
            rendered = context.render();
            &rendered
        };
        self.complete(
            "answer",
            &[("question", question), ("context", context_text)],
            variant,
            self.config.answer_temperature,
            self.config.sample_count,
        )
    }

    /// Sample `sample_count` answers over the context and keep the most
    /// frequent normalized form.
    pub fn answer_leaf(
        &self,
        question: &str,
        context: &ContextBundle,
        variant: u32,
    ) -> Result<MajorityOutcome> {
        let samples = self.sample_answers(question, context, variant)?;
        Ok(select_majority(&samples, &self.config.none_literals).expect("sample_count >= 1"))
    }

    /// One rewrite call asking for `attempts` paraphrases. Variants are
    /// deduplicated and the original is removed; none left is an error.
    pub fn rewrite_query(&self, question: &str, attempts: u32, variant: u32) -> Result<RewriteSet> {
        if attempts < 1 {
            return Err(Error::InvalidParams("attempts must be >= 1".into()));
        }
        let count = attempts.to_string();
        let texts = self.complete(
            "rewrite",
            &[("question", question), ("count", &count)],
            variant,
            self.config.answer_temperature,
            1,
        )?;
        let mut seen = std::collections::HashSet::new();
        let variants: Vec<String> = parse_rewrites(&texts[0])
            .into_iter()
            .filter(|v| v.trim() != question.trim())
            .filter(|v| seen.insert(v.trim().to_string()))
            .take(attempts as usize)
            .collect();
        if variants.is_empty() {
            return Err(Error::RewriteExhausted);
        }
        Ok(RewriteSet {
            original: question.to_string(),
            variants,
        })
    }

    /// Yes/no judgment of whether a child answer can support its parent
    /// question. Unparseable output defaults to supported; the second flag
    /// reports that the default was used.
    pub fn verify_support(
        &self,
        parent_question: &str,
        child_answer: &str,
        variant: u32,
    ) -> Result<(bool, bool)> {
        let texts = self.complete(
            "support",
            &[("question", parent_question), ("answer", child_answer)],
            variant,
            self.config.judgment_temperature,
            1,
        )?;
        match parse_support(&texts[0]) {
            Some(verdict) => Ok((verdict, false)),
            None => Ok((true, true)),
        }
    }

    /// Combine child question/answer pairs into the parent's answer.
    pub fn aggregate(
        &self,
        parent_question: &str,
        child_qa: &[(String, String)],
        variant: u32,
    ) -> Result<String> {
        let pairs = child_qa
            .iter()
            .enumerate()
            .map(|(i, (q, a))| format!("Sub-question {n}: {q}\nAnswer {n}: {a}", n = i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        let texts = self.complete(
            "aggregate",
            &[("question", parent_question), ("qa_pairs", &pairs)],
            variant,
            self.config.judgment_temperature,
            1,
        )?;
        Ok(texts[0].trim().to_string())
    }

    fn reformulate(&self, original: &str, variant: u32) -> Result<String> {
        let texts = self.complete(
            "reformulate",
            &[("question", original)],
            variant,
            self.config.answer_temperature,
            1,
        )?;
        let candidate = texts[0].trim().trim_matches('"').to_string();
        if candidate.is_empty() || is_none_literal(&candidate, &self.config.none_literals) {
            Ok(original.to_string())
        } else {
            Ok(candidate)
        }
    }

    /// Solve one node of a prepared tree (the recursive driver),
    /// returning the node's answer or `None` after all fallbacks.
    pub fn solve_node(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        trace: &mut SolveTrace,
    ) -> Result<Option<String>> {
        let mut best = None;
        self.solve_node_inner(tree, node_id, 0, trace, &mut best)
    }

    fn solve_node_inner(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        variant: u32,
        trace: &mut SolveTrace,
        best: &mut Option<String>,
    ) -> Result<Option<String>> {
        // Resolve the node's question, substituting earlier siblings'
        // answers into placeholders.
        let template = tree.node(node_id)?.question_template.clone();
        let resolved = if has_placeholders(&template) {
            let mut answers = BTreeMap::new();
            for reference in crate::decompose::placeholder_refs(&template) {
                let id: NodeId = reference.parse()?;
                if let Some(answer) = tree.node(id)?.answer.clone() {
                    answers.insert(id, answer);
                }
            }
            let resolved = substitute_placeholders(tree.node(node_id)?, &answers)?;
            trace.push(
                EventKind::Substitute,
                Some(node_id),
                json!({"template": template, "resolved": resolved}),
            );
            resolved
        } else {
            template.clone()
        };
        tree.node_mut(node_id)?.resolved_question = Some(resolved.clone());

        // A deferred leaf gets its decomposition attempt now that the
        // question is concrete; inside the depth bound it may expand.
        if tree.node(node_id)?.is_leaf()
            && tree.node(node_id)?.leaf_kind == Some(LeafKind::Deferred)
        {
            let depth = tree.depth_of(node_id)?;
            if depth < tree.max_depth() {
                self.attempt_expansion(tree, node_id, &resolved, variant, trace)?;
            } else {
                tree.node_mut(node_id)?.leaf_kind = Some(LeafKind::DepthCapped);
            }
        }

        if tree.node(node_id)?.is_leaf() {
            return self.answer_node_as_leaf(tree, node_id, variant, trace);
        }

        // Internal node: solve children in order, restructuring on None.
        let pattern = tree.node(node_id)?.pattern;
        let children = tree.node(node_id)?.children.clone();
        for child_id in children {
            let mut child_answer = self.solve_node_inner(tree, child_id, variant, trace, best)?;

            if child_answer.is_none() && pattern != Pattern::Sequential {
                // A non-sequential child that still has a subtree becomes a
                // new leaf and is retried by direct retrieval.
                if !tree.node(child_id)?.children.is_empty() {
                    let dropped = tree.drop_subtree(child_id, LeafKind::Converted)?;
                    trace.push(
                        EventKind::NoneConvert,
                        Some(child_id),
                        json!({
                            "dropped": dropped.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                            "reason": "parallel_child_none",
                        }),
                    );
                    tree.validate()?;
                    child_answer = self.answer_node_as_leaf(tree, child_id, variant, trace)?;
                }
            }

            match child_answer {
                None => {
                    // A missing sequential link (or an exhausted parallel
                    // leaf) cannot be repaired below this node: collapse the
                    // parent into a leaf and retrieve it directly.
                    let reason = if pattern == Pattern::Sequential {
                        "sequential_child_none"
                    } else {
                        "parallel_leaf_none"
                    };
                    return self.convert_node_and_answer(
                        tree, node_id, child_id, reason, variant, trace, best,
                    );
                }
                Some(answer) => {
                    if pattern == Pattern::Sequential {
                        let (supported, warned) =
                            self.verify_support(&resolved, &answer, variant)?;
                        trace.push(
                            EventKind::SupportCheck,
                            Some(child_id),
                            json!({"answer": answer, "verdict": supported, "parse_warning": warned}),
                        );
                        if !supported {
                            return self.convert_node_and_answer(
                                tree,
                                node_id,
                                child_id,
                                "support_failed",
                                variant,
                                trace,
                                best,
                            );
                        }
                    }
                    if node_id == tree.root() {
                        *best = Some(answer);
                    }
                }
            }
        }

        // All children answered: aggregate.
        let child_qa: Vec<(String, String)> = tree
            .node(node_id)?
            .children
            .iter()
            .map(|&c| {
                let child = tree.node(c).expect("child exists");
                (
                    child.resolved_question.clone().unwrap_or_default(),
                    child.answer.clone().unwrap_or_default(),
                )
            })
            .collect();
        let combined = self.aggregate(&resolved, &child_qa, variant)?;
        let none = is_none_literal(&combined, &self.config.none_literals);
        trace.push(
            EventKind::Aggregate,
            Some(node_id),
            json!({
                "question": resolved,
                "children": child_qa.iter().map(|(q, a)| json!({"question": q, "answer": a})).collect::<Vec<_>>(),
                "answer": combined,
                "none": none,
            }),
        );
        if none {
            tree.node_mut(node_id)?.status = NodeStatus::FailedNone;
            return Ok(None);
        }
        let node = tree.node_mut(node_id)?;
        node.answer = Some(combined.clone());
        node.status = NodeStatus::Answered;
        Ok(Some(combined))
    }

    /// Solve-time decomposition attempt on a resolved question. Direct (or
    /// any analysis/decomposition failure) confirms the leaf; a split grows
    /// the tree, with the new children deferred to their own solve turns.
    fn attempt_expansion(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        resolved: &str,
        variant: u32,
        trace: &mut SolveTrace,
    ) -> Result<()> {
        let attempt = self
            .decomposer
            .analyze_internal(resolved, variant)
            .and_then(|analysis| {
                self.decomposer
                    .decompose_internal(resolved, &analysis, variant)
            });
        let (pattern, child_templates) = match attempt {
            Ok(split) => split,
            Err(_) => {
                trace.push(
                    EventKind::Decompose,
                    Some(node_id),
                    json!({"question": resolved, "outcome": "direct", "phase": "solve", "fallback": true}),
                );
                tree.node_mut(node_id)?.leaf_kind = Some(LeafKind::Confirmed);
                return Ok(());
            }
        };
        trace.push(
            EventKind::Decompose,
            Some(node_id),
            json!({
                "question": resolved,
                "pattern": pattern,
                "children": child_templates,
                "outcome": if pattern == Pattern::Direct { "direct" } else { "expanded" },
                "phase": "solve",
            }),
        );
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
        }
        tree.validate()?;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn convert_node_and_answer(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        child_id: NodeId,
        reason: &str,
        variant: u32,
        trace: &mut SolveTrace,
        best: &mut Option<String>,
    ) -> Result<Option<String>> {
        let dropped = tree.drop_subtree(node_id, LeafKind::Converted)?;
        trace.push(
            EventKind::NoneConvert,
            Some(node_id),
            json!({
                "dropped": dropped.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "reason": reason,
                "child": child_id.to_string(),
            }),
        );
        tree.validate()?;
        let answer = self.answer_node_as_leaf(tree, node_id, variant, trace)?;
        if node_id != tree.root() {
            if let Some(a) = &answer {
                if tree.parent_of(node_id) == Some(tree.root()) {
                    *best = Some(a.clone());
                }
            }
        }
        Ok(answer)
    }

    /// Retrieve + answer a leaf; on a None-result retry each rewrite variant
    /// in order until something answers or the variants run out.
    fn answer_node_as_leaf(
        &self,
        tree: &mut ReasoningTree,
        node_id: NodeId,
        variant: u32,
        trace: &mut SolveTrace,
    ) -> Result<Option<String>> {
        let question = tree
            .node(node_id)?
            .resolved_question
            .clone()
            .unwrap_or_else(|| tree.node(node_id).unwrap().question_template.clone());

        let mut outcome = self.attempt_leaf_answer(node_id, &question, variant, trace)?;
        if outcome.is_none_result() {
            match self.rewrite_query(&question, self.config.rewrite_attempts, variant) {
                Ok(set) => {
                    trace.push(
                        EventKind::Rewrite,
                        Some(node_id),
                        json!({"question": question, "variants": set.variants}),
                    );
                    for rewritten in &set.variants {
                        outcome = self.attempt_leaf_answer(node_id, rewritten, variant, trace)?;
                        if !outcome.is_none_result() {
                            break;
                        }
                    }
                }
                Err(Error::RewriteExhausted) => {
                    trace.push(
                        EventKind::Rewrite,
                        Some(node_id),
                        json!({"question": question, "variants": [], "exhausted": true}),
                    );
                }
                Err(e) => return Err(e),
            }
        }

        let node = tree.node_mut(node_id)?;
        match outcome {
            MajorityOutcome::Answer(candidate) => {
                node.answer = Some(candidate.raw_text.clone());
                node.status = NodeStatus::Answered;
                Ok(Some(candidate.raw_text))
            }
            MajorityOutcome::None(_) => {
                node.status = NodeStatus::FailedNone;
                Ok(None)
            }
        }
    }

    fn attempt_leaf_answer(
        &self,
        node_id: NodeId,
        question: &str,
        variant: u32,
        trace: &mut SolveTrace,
    ) -> Result<MajorityOutcome> {
        let bundle = self.retrieve_for(question)?;
        trace.push(
            EventKind::Retrieve,
            Some(node_id),
            json!({
                "question": question,
                "chunk_ids": bundle.ranked_chunks.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
                "total_tokens": bundle.total_tokens,
            }),
        );
        let samples = self.sample_answers(question, &bundle, variant)?;
        let outcome =
            select_majority(&samples, &self.config.none_literals).expect("sample_count >= 1");
        let winner = outcome.winner();
        trace.push(
            EventKind::LeafAnswer,
            Some(node_id),
            json!({
                "question": question,
                "samples": samples,
                "answer": winner.raw_text,
                "frequency": winner.frequency,
                "none": outcome.is_none_result(),
            }),
        );
        Ok(outcome)
    }

    /// Full pipeline for one question: consensus decomposition, bottom-up
    /// solve, and up to `max_rounds` reformulation rounds. Always returns
    /// the trace; the answer is `None` only when every round exhausted and
    /// no intermediate answer survived.
    pub fn answer_question(&self, question: &str) -> Result<(Option<String>, SolveTrace)> {
        if question.trim().is_empty() {
            return Err(Error::InvalidParams("question must be non-empty".into()));
        }
        let mut trace = SolveTrace::new(question, self.templates.version());
        let mut best_intermediate: Option<String> = None;
        let mut current = question.to_string();
        let mut answered: Option<String> = None;

        for round in 1..=self.config.max_rounds {
            trace.rounds_used = round;
            let variant_base = (round - 1) * self.candidate_count as u32;
            let selection = self.decomposer.select_consensus_tree(
                &current,
                self.candidate_count,
                self.config.max_depth,
                variant_base,
                &mut trace.events,
            );
            let solved = match selection {
                Ok((mut tree, _report)) => {
                    let root = tree.root();
                    self.solve_node_inner(
                        &mut tree,
                        root,
                        round - 1,
                        &mut trace,
                        &mut best_intermediate,
                    )?
                }
                Err(Error::ConsensusExhausted) => None,
                Err(e) => return Err(e),
            };
            if let Some(answer) = solved {
                answered = Some(answer);
                break;
            }
            if round < self.config.max_rounds {
                let reformulated = self.reformulate(question, round)?;
                trace.push(
                    EventKind::Refine,
                    None,
                    json!({"round": round + 1, "reformulated": reformulated}),
                );
                current = reformulated;
            }
        }

        match answered {
            Some(answer) => {
                trace.status = SolveStatus::Answered;
                trace.final_answer = Some(answer.clone());
                Ok((Some(answer), trace))
            }
            None => match best_intermediate {
                Some(partial) => {
                    trace.status = SolveStatus::BestEffort;
                    trace.final_answer = Some(partial.clone());
                    Ok((Some(partial), trace))
                }
                None => {
                    trace.status = SolveStatus::Unanswered;
                    trace.final_answer = None;
                    Ok((None, trace))
                }
            },
        }
    }
}
