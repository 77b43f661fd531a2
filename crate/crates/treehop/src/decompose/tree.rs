//! The reasoning tree: sub-questions, dependency placeholders, patterns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decompose::parse::placeholder_refs;
use crate::error::{Error, Result};
use crate::trace::NodeId;

/// How a node's children relate. `Direct` marks a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Parallel,
    Sequential,
    Direct,
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Pattern::Parallel => "parallel",
            Pattern::Sequential => "sequential",
            Pattern::Direct => "direct",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Pending,
    Answered,
    FailedNone,
}

/// Why a leaf is currently a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafKind {
    /// A decomposition attempt returned `direct`.
    Confirmed,
    /// The template still carries placeholders; decomposition is deferred
    /// until the node's question is resolved during the solve.
    Deferred,
    /// The depth bound forbids expanding this node.
    DepthCapped,
    /// A None-conversion dropped this node's subtree.
    Converted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub node_id: NodeId,
    /// Question text, possibly containing `[answer from Nk]` placeholders.
    pub question_template: String,
    pub pattern: Pattern,
    pub children: Vec<NodeId>,
    pub status: NodeStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaf_kind: Option<LeafKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resolved_question: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answer: Option<String>,
}

impl TreeNode {
    pub fn leaf(node_id: NodeId, template: impl Into<String>, kind: LeafKind) -> Self {
        TreeNode {
            node_id,
            question_template: template.into(),
            pattern: Pattern::Direct,
            children: Vec::new(),
            status: NodeStatus::Pending,
            leaf_kind: Some(kind),
            resolved_question: None,
            answer: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Shape summary used for consensus voting: `(depth, node_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeSignature {
    pub depth: usize,
    pub node_count: usize,
}

/// The decomposition of one question. Nodes are keyed by id; the root is
/// `N0` and carries the (possibly reformulated) original question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTree {
    nodes: BTreeMap<u32, TreeNode>,
    root: NodeId,
    max_depth: usize,
    next_id: u32,
}

impl ReasoningTree {
    pub fn new(question: impl Into<String>, max_depth: usize) -> Self {
        let mut nodes = BTreeMap::new();
        let root = NodeId::ROOT;
        nodes.insert(root.0, TreeNode::leaf(root, question, LeafKind::Deferred));
        ReasoningTree {
            nodes,
            root,
            max_depth,
            next_id: 1,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode> {
        self.nodes
            .get(&id.0)
            .ok_or_else(|| Error::InvalidTree(format!("no node {id}")))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut TreeNode> {
        self.nodes
            .get_mut(&id.0)
            .ok_or_else(|| Error::InvalidTree(format!("no node {id}")))
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().map(|&k| NodeId(k)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Allocate the next id in discovery order.
    pub fn alloc(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn insert(&mut self, node: TreeNode) {
        self.nodes.insert(node.node_id.0, node);
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.nodes
            .values()
            .find(|n| n.children.contains(&id))
            .map(|n| n.node_id)
    }

    /// Depth of a node, root = 1.
    pub fn depth_of(&self, id: NodeId) -> Result<usize> {
        let mut depth = 1;
        let mut current = id;
        while current != self.root {
            current = self
                .parent_of(current)
                .ok_or_else(|| Error::InvalidTree(format!("{id} is not connected to the root")))?;
            depth += 1;
            if depth > self.nodes.len() {
                return Err(Error::InvalidTree("parent chain has a cycle".into()));
            }
        }
        Ok(depth)
    }

    /// Tree depth: longest root-to-leaf edge count plus one.
    pub fn depth(&self) -> usize {
        fn walk(tree: &ReasoningTree, id: NodeId) -> usize {
            let node = &tree.nodes[&id.0];
            1 + node
                .children
                .iter()
                .map(|&c| walk(tree, c))
                .max()
                .unwrap_or(0)
        }
        walk(self, self.root)
    }

    pub fn signature(&self) -> TreeSignature {
        TreeSignature {
            depth: self.depth(),
            node_count: self.node_count(),
        }
    }

    /// Remove a node's whole subtree (children and below), turning the node
    /// into a leaf of the given kind. Returns the dropped ids in order.
    pub fn drop_subtree(&mut self, id: NodeId, kind: LeafKind) -> Result<Vec<NodeId>> {
        let mut dropped = Vec::new();
        let children = self.node(id)?.children.clone();
        let mut stack: Vec<NodeId> = children;
        while let Some(current) = stack.pop() {
            let node = self.node(current)?;
            stack.extend(node.children.iter().copied());
            dropped.push(current);
        }
        for &d in &dropped {
            self.nodes.remove(&d.0);
        }
        dropped.sort();
        let node = self.node_mut(id)?;
        node.children.clear();
        node.pattern = Pattern::Direct;
        node.leaf_kind = Some(kind);
        node.status = NodeStatus::Pending;
        node.answer = None;
        Ok(dropped)
    }

    /// Check every structural invariant. Run after construction and after
    /// every mutation during solving.
    pub fn validate(&self) -> Result<()> {
        if !self.nodes.contains_key(&self.root.0) {
            return Err(Error::InvalidTree("missing root".into()));
        }
        // Every non-root node has exactly one parent; root has none.
        let mut parent_count: BTreeMap<u32, usize> = BTreeMap::new();
        for node in self.nodes.values() {
            for child in &node.children {
                if !self.nodes.contains_key(&child.0) {
                    return Err(Error::InvalidTree(format!(
                        "{} lists missing child {child}",
                        node.node_id
                    )));
                }
                *parent_count.entry(child.0).or_default() += 1;
            }
        }
        if parent_count.contains_key(&self.root.0) {
            return Err(Error::InvalidTree("root has a parent".into()));
        }
        for (&id, &count) in &parent_count {
            if count > 1 {
                return Err(Error::InvalidTree(format!("N{id} has {count} parents")));
            }
        }
        // Connected and acyclic: a DFS from the root must visit every node
        // exactly once.
        let mut visited = std::collections::BTreeSet::new();
        let mut stack = vec![self.root];
        while let Some(current) = stack.pop() {
            if !visited.insert(current.0) {
                return Err(Error::InvalidTree(format!(
                    "{current} visited twice (cycle)"
                )));
            }
            stack.extend(self.nodes[&current.0].children.iter().copied());
        }
        if visited.len() != self.nodes.len() {
            return Err(Error::InvalidTree("tree is not connected".into()));
        }

        if self.depth() > self.max_depth {
            return Err(Error::InvalidTree(format!(
                "depth {} exceeds max depth {}",
                self.depth(),
                self.max_depth
            )));
        }

        for node in self.nodes.values() {
            if node.pattern == Pattern::Direct && !node.children.is_empty() {
                return Err(Error::InvalidTree(format!(
                    "{} is direct but has children",
                    node.node_id
                )));
            }
            if node.pattern != Pattern::Direct && node.children.is_empty() {
                return Err(Error::InvalidTree(format!(
                    "{} has pattern {} but no children",
                    node.node_id, node.pattern
                )));
            }
            if node.status == NodeStatus::Answered
                && (node.answer.is_none() || node.resolved_question.is_none())
            {
                return Err(Error::InvalidTree(format!(
                    "{} is answered without answer/resolved question",
                    node.node_id
                )));
            }
            // Placeholders may only reference earlier siblings under a
            // sequential parent.
            self.validate_placeholders(node)?;
        }
        Ok(())
    }

    fn validate_placeholders(&self, node: &TreeNode) -> Result<()> {
        let refs = placeholder_refs(&node.question_template);
        if refs.is_empty() {
            return Ok(());
        }
        let Some(parent_id) = self.parent_of(node.node_id) else {
            return Err(Error::InvalidTree(format!(
                "root {} must not contain placeholders",
                node.node_id
            )));
        };
        let parent = self.node(parent_id)?;
        if parent.pattern != Pattern::Sequential {
            return Err(Error::InvalidTree(format!(
                "{} has placeholders under non-sequential parent {parent_id}",
                node.node_id
            )));
        }
        let own_pos = parent
            .children
            .iter()
            .position(|&c| c == node.node_id)
            .expect("parent_of guarantees membership");
        for reference in refs {
            let target: NodeId = reference.parse()?;
            let target_pos = parent.children.iter().position(|&c| c == target);
            match target_pos {
                Some(pos) if pos < own_pos => {}
                _ => {
                    return Err(Error::InvalidTree(format!(
                        "{} references {target}, which is not an earlier sibling",
                        node.node_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Indented rendering for `inspect-tree` and debugging.
    pub fn render(&self) -> String {
        fn walk(tree: &ReasoningTree, id: NodeId, indent: usize, out: &mut String) {
            let node = &tree.nodes[&id.0];
            let marker = match node.leaf_kind {
                Some(LeafKind::Confirmed) => " [leaf]",
                Some(LeafKind::Deferred) => " [leaf: deferred]",
                Some(LeafKind::DepthCapped) => " [leaf: depth-capped]",
                Some(LeafKind::Converted) => " [leaf: converted]",
                None => "",
            };
            out.push_str(&format!(
                "{}{} ({}){}: {}\n",
                "  ".repeat(indent),
                node.node_id,
                node.pattern,
                marker,
                node.question_template
            ));
            for &child in &node.children {
                walk(tree, child, indent + 1, out);
            }
        }
        let mut out = String::new();
        walk(self, self.root, 0, &mut out);
        out
    }
}
