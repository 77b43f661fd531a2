//! Token-budgeted context assembly.

use serde::{Deserialize, Serialize};

use crate::retrieval::chunk::Chunk;

/// The reranked, budget-limited evidence handed to the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    /// `(chunk_id, rerank score)`, scores non-increasing.
    pub ranked_chunks: Vec<(String, f32)>,
    pub total_tokens: usize,
    pub budget: usize,
    /// Chunk texts aligned with `ranked_chunks`, used to render prompts.
    pub texts: Vec<String>,
}

impl ContextBundle {
    pub fn empty(budget: usize) -> Self {
        ContextBundle {
            ranked_chunks: Vec::new(),
            total_tokens: 0,
            budget,
            texts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_chunks.is_empty()
    }

    /// Evidence block for prompts: chunks in rank order, blank-line separated.
    pub fn render(&self) -> String {
        self.texts.join("\n\n")
    }
}

/// Greedily pack ranked chunks under the token budget. A chunk that would
/// overflow is skipped and packing continues with later (smaller) chunks;
/// chunks are never truncated; duplicate chunk ids are dropped.
///
/// `ranked` pairs each scored id with its chunk; scores must be sorted
/// descending.
pub fn assemble_context(ranked: &[(f32, &Chunk)], budget: usize) -> ContextBundle {
    let mut bundle = ContextBundle::empty(budget);
    let mut seen = std::collections::HashSet::new();
    for (score, chunk) in ranked {
        if !seen.insert(chunk.chunk_id.as_str()) {
            continue;
        }
        if bundle.total_tokens + chunk.token_count > budget {
            continue;
        }
        bundle.total_tokens += chunk.token_count;
        bundle.ranked_chunks.push((chunk.chunk_id.clone(), *score));
        bundle.texts.push(chunk.text.clone());
    }
    bundle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(id: &str, tokens: usize) -> Chunk {
        Chunk {
            chunk_id: id.to_string(),
            doc_id: "d".to_string(),
            token_span: (0, tokens),
            token_count: tokens,
            text: vec!["w"; tokens].join(" "),
        }
    }

    #[test]
    fn fifteen_chunks_of_200_fill_3000_exactly() {
        let chunks: Vec<Chunk> = (0..20).map(|i| chunk(&format!("c{i}"), 200)).collect();
        let ranked: Vec<(f32, &Chunk)> = chunks
            .iter()
            .enumerate()
            .map(|(i, c)| (1.0 - i as f32 * 0.01, c))
            .collect();
        let bundle = assemble_context(&ranked, 3000);
        assert_eq!(bundle.ranked_chunks.len(), 15);
        assert_eq!(bundle.total_tokens, 3000);
    }

    #[test]
    fn nothing_fits_gives_empty_bundle() {
        let big = chunk("c0", 500);
        let bundle = assemble_context(&[(1.0, &big)], 100);
        assert!(bundle.is_empty());
        assert_eq!(bundle.total_tokens, 0);
    }

    #[test]
    fn oversized_chunk_is_skipped_not_truncated() {
        let a = chunk("A", 2900);
        let b = chunk("B", 200);
        let c = chunk("C", 50);
        let bundle = assemble_context(&[(0.9, &a), (0.8, &b), (0.7, &c)], 3000);
        let ids: Vec<&str> = bundle
            .ranked_chunks
            .iter()
            .map(|(id, _)| id.as_str())
            .collect();
        assert_eq!(ids, vec!["A", "C"]);
        assert_eq!(bundle.total_tokens, 2950);
    }

    #[test]
    fn duplicate_ids_are_dropped() {
        let a = chunk("A", 100);
        let bundle = assemble_context(&[(0.9, &a), (0.8, &a)], 3000);
        assert_eq!(bundle.ranked_chunks.len(), 1);
    }

    #[test]
    fn empty_input_is_empty_bundle() {
        let bundle = assemble_context(&[], 3000);
        assert!(bundle.is_empty());
    }
}
