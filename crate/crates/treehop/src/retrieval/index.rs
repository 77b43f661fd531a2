//! Exact-search vector index over chunk embeddings.
//!
//! Corpora here are small (couple of thousand passages), so search is an
//! exact dot-product scan — no approximate structures. The index is immutable
//! once built and safe to share across threads.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::chunk::Chunk;

pub const INDEX_FORMAT_VERSION: u32 = 1;

/// Immutable list of `(chunk_id, unit vector)` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    format_version: u32,
    dimension: usize,
    chunk_ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
}

impl VectorIndex {
    /// Assemble an index from parallel id/vector lists. Vectors must already
    /// be unit-norm (the gateway guarantees this) and share one dimension.
    pub fn from_entries(chunk_ids: Vec<String>, vectors: Vec<Vec<f32>>) -> Result<Self> {
        if chunk_ids.len() != vectors.len() {
            return Err(Error::Index(format!(
                "{} ids vs {} vectors",
                chunk_ids.len(),
                vectors.len()
            )));
        }
        if chunk_ids.is_empty() {
            return Err(Error::Index("cannot build an empty index".into()));
        }
        let dimension = vectors[0].len();
        for v in &vectors {
            if v.len() != dimension {
                return Err(Error::Index("vectors have mixed dimensions".into()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for id in &chunk_ids {
            if !seen.insert(id) {
                return Err(Error::Index(format!("duplicate chunk_id `{id}`")));
            }
        }
        Ok(VectorIndex {
            format_version: INDEX_FORMAT_VERSION,
            dimension,
            chunk_ids,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn chunk_ids(&self) -> &[String] {
        &self.chunk_ids
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let index: VectorIndex = serde_json::from_slice(&bytes)?;
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::Index(format!(
                "index format version {} is not supported (expected {})",
                index.format_version, INDEX_FORMAT_VERSION
            )));
        }
        Ok(index)
    }
}

/// Exact top-`min(k, len)` entries by dot-product similarity against a unit
/// query vector, sorted by similarity descending, ties broken by ascending
/// insertion order.
pub fn coarse_retrieve(index: &VectorIndex, query: &[f32], k: usize) -> Result<Vec<(String, f32)>> {
    if index.is_empty() {
        return Err(Error::Index("coarse_retrieve on an empty index".into()));
    }
    if k == 0 {
        return Err(Error::Index("k must be >= 1".into()));
    }
    if query.len() != index.dimension {
        return Err(Error::Index(format!(
            "query dimension {} does not match index dimension {}",
            query.len(),
            index.dimension
        )));
    }
    let mut scored: Vec<(usize, f32)> = index
        .vectors
        .iter()
        .map(|v| v.iter().zip(query).map(|(a, b)| a * b).sum::<f32>())
        .enumerate()
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k.min(index.len()));
    Ok(scored
        .into_iter()
        .map(|(i, score)| (index.chunk_ids[i].clone(), score))
        .collect())
}

/// Sidecar metadata persisted with an index so retrieval can recover chunk
/// texts and the config the corpus was chunked with. `index` is `None` only
/// for a corpus with no tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArtifact {
    pub format_version: u32,
    pub config: crate::retrieval::chunk::RetrievalConfig,
    pub chunks: Vec<Chunk>,
    pub index: Option<VectorIndex>,
}

impl IndexArtifact {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let artifact: IndexArtifact = serde_json::from_slice(&bytes)?;
        if artifact.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::Index(format!(
                "index artifact version {} is not supported (expected {})",
                artifact.format_version, INDEX_FORMAT_VERSION
            )));
        }
        Ok(artifact)
    }
}
