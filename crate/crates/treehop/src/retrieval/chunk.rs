//! Sliding-window document chunking.
//!
//! Chunks start at strides of `chunk_size - overlap` in token coordinates.
//! Generation stops with the first chunk whose end is clamped to the document
//! end, so every token is covered and consecutive chunks share exactly
//! `overlap` tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::tokenize::{slice_tokens, tokenize};

/// A contiguous token window of one source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    /// Token coordinates `[start, end)` within the source document.
    pub token_span: (usize, usize),
    pub text: String,
    pub token_count: usize,
}

/// Retrieval knobs. Defaults are chunk 200 / overlap 100, coarse k=45,
/// fine k=15, context budget 3000 tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub coarse_k: usize,
    pub fine_k: usize,
    pub context_budget: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            chunk_size: 200,
            overlap: 100,
            coarse_k: 45,
            fine_k: 15,
            context_budget: 3000,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0
            || self.coarse_k == 0
            || self.fine_k == 0
            || self.context_budget == 0
        {
            return Err(Error::Config("retrieval sizes must all be positive".into()));
        }
        if self.overlap >= self.chunk_size {
            return Err(Error::Config(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            )));
        }
        if self.fine_k > self.coarse_k {
            return Err(Error::Config(format!(
                "fine_k ({}) must not exceed coarse_k ({})",
                self.fine_k, self.coarse_k
            )));
        }
        Ok(())
    }
}

/// Split one document into overlapping chunks. Empty documents yield an
/// empty list.
pub fn chunk_document(doc_id: &str, text: &str, config: &RetrievalConfig) -> Result<Vec<Chunk>> {
    config.validate()?;
    let spans = tokenize(text);
    let total = spans.len();
    if total == 0 {
        return Ok(Vec::new());
    }
    let stride = config.chunk_size - config.overlap;
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + config.chunk_size).min(total);
        let chunk_text = slice_tokens(text, &spans, start, end - 1).to_string();
        chunks.push(Chunk {
            chunk_id: format!("{doc_id}#{}", chunks.len()),
            doc_id: doc_id.to_string(),
            token_span: (start, end),
            token_count: end - start,
            text: chunk_text,
        });
        if end == total {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}
