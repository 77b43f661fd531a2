//! Corpus ingestion, chunking, embedding index, coarse retrieval, reranking,
//! and token-budgeted context assembly.
//!
//! The pipeline for one question is fixed: embed the query, take the top
//! `coarse_k` chunks by dot product, rerank them and keep `fine_k`, then
//! pack chunks greedily under the context token budget.

pub mod chunk;
pub mod context;
pub mod corpus;
pub mod index;
pub mod tokenize;

pub use chunk::{chunk_document, Chunk, RetrievalConfig};
pub use context::{assemble_context, ContextBundle};
pub use corpus::{load_corpus, passages_to_documents, split_passages, Document, Passage};
pub use index::{coarse_retrieve, IndexArtifact, VectorIndex, INDEX_FORMAT_VERSION};

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gateway::ModelGateway;

const EMBED_BATCH: usize = 64;

/// Embed all chunks (batched, concurrently under the gateway's parallelism
/// bound) and build the index. Entry order matches input order. Any
/// embedding failure aborts the whole build.
pub fn build_index(gateway: &ModelGateway, chunks: &[Chunk]) -> Result<VectorIndex> {
    if chunks.is_empty() {
        return Err(Error::Index("cannot index zero chunks".into()));
    }
    let batches: Vec<Vec<String>> = chunks
        .chunks(EMBED_BATCH)
        .map(|batch| batch.iter().map(|c| c.text.clone()).collect())
        .collect();
    let mut results: Vec<Option<Result<Vec<Vec<f32>>>>> =
        (0..batches.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = batches
            .iter()
            .map(|batch| scope.spawn(move || gateway.embed(batch)))
            .collect();
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("embed worker panicked"));
        }
    });
    let mut vectors = Vec::with_capacity(chunks.len());
    for result in results {
        vectors.extend(result.unwrap()?);
    }
    VectorIndex::from_entries(chunks.iter().map(|c| c.chunk_id.clone()).collect(), vectors)
}

/// Rerank coarse candidates and keep the top `min(k, len)` by rerank score.
pub fn fine_rank(
    gateway: &ModelGateway,
    query: &str,
    candidates: &[(String, f32)],
    texts: &[String],
    k: usize,
) -> Result<Vec<(String, f32)>> {
    if candidates.is_empty() {
        return Err(Error::Index(
            "fine_rank needs at least one candidate".into(),
        ));
    }
    let ranked = gateway.rerank(query, texts)?;
    Ok(ranked
        .into_iter()
        .take(k.min(candidates.len()))
        .map(|(i, score)| (candidates[i].0.clone(), score))
        .collect())
}

/// A chunked, indexed corpus plus the gateway, ready to serve questions.
pub struct Retriever {
    gateway: Arc<ModelGateway>,
    config: RetrievalConfig,
    chunks: Vec<Chunk>,
    positions: HashMap<String, usize>,
    index: Option<VectorIndex>,
}

impl Retriever {
    /// Chunk every document and build the index. Documents with no tokens
    /// are skipped; a corpus with no tokens at all yields an empty retriever
    /// whose bundles are empty.
    pub fn build(
        gateway: Arc<ModelGateway>,
        config: RetrievalConfig,
        documents: &[Document],
    ) -> Result<Self> {
        config.validate()?;
        let mut chunks = Vec::new();
        for doc in documents {
            chunks.extend(chunk_document(&doc.doc_id, &doc.text, &config)?);
        }
        let index = if chunks.is_empty() {
            None
        } else {
            Some(build_index(&gateway, &chunks)?)
        };
        Ok(Self::assemble(gateway, config, chunks, index))
    }

    pub fn from_artifact(gateway: Arc<ModelGateway>, artifact: IndexArtifact) -> Self {
        Self::assemble(gateway, artifact.config, artifact.chunks, artifact.index)
    }

    fn assemble(
        gateway: Arc<ModelGateway>,
        config: RetrievalConfig,
        chunks: Vec<Chunk>,
        index: Option<VectorIndex>,
    ) -> Self {
        let positions = chunks
            .iter()
            .enumerate()
            .map(|(i, c)| (c.chunk_id.clone(), i))
            .collect();
        Retriever {
            gateway,
            config,
            chunks,
            positions,
            index,
        }
    }

    pub fn artifact(&self) -> IndexArtifact {
        IndexArtifact {
            format_version: INDEX_FORMAT_VERSION,
            config: self.config.clone(),
            chunks: self.chunks.clone(),
            index: self.index.clone(),
        }
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn chunk_count(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.positions.get(chunk_id).map(|&i| &self.chunks[i])
    }

    fn texts_for(&self, candidates: &[(String, f32)]) -> Vec<String> {
        candidates
            .iter()
            .map(|(id, _)| self.chunk(id).map(|c| c.text.clone()).unwrap_or_default())
            .collect()
    }

    /// The full coarse -> rerank -> budget pipeline for one question.
    pub fn retrieve(&self, question: &str) -> Result<ContextBundle> {
        Ok(self.retrieve_stages(question)?.2)
    }

    /// Like [`Retriever::retrieve`], but also returns the intermediate
    /// coarse and fine rankings.
    #[allow(clippy::type_complexity)]
    pub fn retrieve_stages(
        &self,
        question: &str,
    ) -> Result<(Vec<(String, f32)>, Vec<(String, f32)>, ContextBundle)> {
        let Some(index) = &self.index else {
            let empty = ContextBundle::empty(self.config.context_budget);
            return Ok((Vec::new(), Vec::new(), empty));
        };
        let query = self
            .gateway
            .embed(std::slice::from_ref(&question.to_string()))?
            .remove(0);
        let coarse = coarse_retrieve(index, &query, self.config.coarse_k)?;
        let texts = self.texts_for(&coarse);
        let fine = fine_rank(&self.gateway, question, &coarse, &texts, self.config.fine_k)?;
        let ranked: Vec<(f32, &Chunk)> = fine
            .iter()
            .filter_map(|(id, score)| self.chunk(id).map(|c| (*score, c)))
            .collect();
        let bundle = assemble_context(&ranked, self.config.context_budget);
        Ok((coarse, fine, bundle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedOracle;

    fn gateway(oracle: ScriptedOracle) -> Arc<ModelGateway> {
        Arc::new(ModelGateway::new(Arc::new(oracle)))
    }

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: text.into(),
        }
    }

    #[test]
    fn build_index_preserves_chunk_ids_in_order() {
        let mut oracle = ScriptedOracle::permissive(8);
        oracle.strict = false;
        let gw = gateway(oracle);
        let config = RetrievalConfig {
            chunk_size: 4,
            overlap: 2,
            ..RetrievalConfig::default()
        };
        let chunks = chunk_document("d", "a b c d e f g h", &config).unwrap();
        let index = build_index(&gw, &chunks).unwrap();
        assert_eq!(index.len(), chunks.len());
        assert_eq!(
            index.chunk_ids(),
            chunks
                .iter()
                .map(|c| c.chunk_id.clone())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_chunk_single_entry() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let chunks = chunk_document("d", "short text", &RetrievalConfig::default()).unwrap();
        let index = build_index(&gw, &chunks).unwrap();
        assert_eq!(index.len(), 1);
    }

    #[test]
    fn rebuilding_from_same_chunks_is_identical() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let chunks = chunk_document(
            "d",
            "one two three four five six",
            &RetrievalConfig::default(),
        )
        .unwrap();
        let a = serde_json::to_vec(&build_index(&gw, &chunks).unwrap()).unwrap();
        let b = serde_json::to_vec(&build_index(&gw, &chunks).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fine_rank_follows_rerank_scores_not_similarity() {
        let mut oracle = ScriptedOracle::permissive(8);
        // Invert whatever order coarse produced for this 2-passage case.
        oracle.rerank_contains("which", [0.1, 0.9]);
        let gw = gateway(oracle);
        let candidates = vec![("c1".to_string(), 0.9), ("c2".to_string(), 0.5)];
        let texts = vec!["first".to_string(), "second".to_string()];
        let fine = fine_rank(&gw, "which one", &candidates, &texts, 2).unwrap();
        assert_eq!(fine[0].0, "c2");
        assert_eq!(fine[1].0, "c1");
    }

    #[test]
    fn fine_rank_caps_at_k() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let candidates: Vec<(String, f32)> = (0..45).map(|i| (format!("c{i}"), 1.0)).collect();
        let texts: Vec<String> = (0..45).map(|i| format!("passage {i}")).collect();
        let fine = fine_rank(&gw, "q", &candidates, &texts, 15).unwrap();
        assert_eq!(fine.len(), 15);
    }

    #[test]
    fn single_candidate_passes_through() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let fine = fine_rank(
            &gw,
            "q",
            &[("only".to_string(), 1.0)],
            &["text".to_string()],
            15,
        )
        .unwrap();
        assert_eq!(fine.len(), 1);
        assert_eq!(fine[0].0, "only");
    }

    #[test]
    fn empty_corpus_retrieves_empty_bundle() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let retriever = Retriever::build(gw, RetrievalConfig::default(), &[]).unwrap();
        let bundle = retriever.retrieve("anything").unwrap();
        assert!(bundle.is_empty());
    }

    #[test]
    fn pipeline_output_is_subset_of_index() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let docs: Vec<Document> = (0..6)
            .map(|i| {
                doc(
                    &format!("d{i}"),
                    &format!("document {i} talks about topic {i} in detail"),
                )
            })
            .collect();
        let retriever = Retriever::build(gw, RetrievalConfig::default(), &docs).unwrap();
        let bundle = retriever.retrieve("topic 3").unwrap();
        assert!(bundle.total_tokens <= 3000);
        for (id, _) in &bundle.ranked_chunks {
            assert!(retriever.chunk(id).is_some());
        }
    }

    #[test]
    fn artifact_round_trip_preserves_retrieval() {
        let gw = gateway(ScriptedOracle::permissive(8));
        let docs = vec![
            doc("d0", "the quick brown fox"),
            doc("d1", "jumped over the lazy dog"),
        ];
        let retriever = Retriever::build(gw.clone(), RetrievalConfig::default(), &docs).unwrap();
        let artifact = retriever.artifact();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        artifact.save(&path).unwrap();
        let restored = Retriever::from_artifact(gw, IndexArtifact::load(&path).unwrap());
        let a = retriever.retrieve("brown fox").unwrap();
        let b = restored.retrieve("brown fox").unwrap();
        assert_eq!(a, b);
    }
}
