//! Uniform access to the three model capabilities the engine needs:
//! text completion, embedding, and reranking.
//!
//! A [`ModelGateway`] wraps a [`Backend`] (live HTTP or scripted fixture)
//! and adds the behavior every caller relies on: request validation,
//! on-disk response caching keyed by content digest, L2 normalization of
//! embeddings (cosine becomes a plain dot product downstream), rerank
//! ordering with deterministic tie-breaks, a parallelism bound, and call
//! counters.

mod cache;
mod http;
mod scripted;

pub use cache::{CacheRecord, CachedPayload, ResponseCache};
pub use http::{HttpBackend, HttpConfig};
pub use scripted::{MatchMode, ScriptedEntry, ScriptedOracle};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use crate::error::{Error, Result};

/// Sampling knobs for one completion request.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenerationParams {
    pub temperature: f32,
    pub max_output_tokens: u32,
    pub sample_count: u32,
    pub stop_sequences: Vec<String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_output_tokens: 512,
            sample_count: 1,
            stop_sequences: Vec::new(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self, live_backend: bool) -> Result<()> {
        if self.sample_count < 1 {
            return Err(Error::InvalidParams("sample_count must be >= 1".into()));
        }
        if self.temperature < 0.0 {
            return Err(Error::InvalidParams("temperature must be >= 0".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(Error::InvalidParams(
                "max_output_tokens must be >= 1".into(),
            ));
        }
        // Greedy duplicates would make frequency voting vacuous. Scripted
        // backends replay fixtures and are exempt.
        if live_backend && self.sample_count > 1 && self.temperature <= 0.0 {
            return Err(Error::InvalidParams(
                "sample_count > 1 requires temperature > 0 on a live backend".into(),
            ));
        }
        Ok(())
    }
}

/// One completion request. `template_id` names the prompt template the text
/// was rendered from; `variant` distinguishes otherwise-identical requests
/// (consensus candidates, refinement rounds) so caching cannot collapse
/// independent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub template_id: String,
    pub prompt: String,
    pub variant: u32,
    pub params: GenerationParams,
}

impl CompletionRequest {
    pub fn new(template_id: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            template_id: template_id.into(),
            prompt: prompt.into(),
            variant: 0,
            params: GenerationParams::default(),
        }
    }

    pub fn with_variant(mut self, variant: u32) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_params(mut self, params: GenerationParams) -> Self {
        self.params = params;
        self
    }

    /// Canonical request content used for scripted matching and cache keys.
    pub fn fingerprint(&self) -> String {
        fingerprint_complete(self)
    }
}

/// Texts returned by one completion call, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub texts: Vec<String>,
    pub backend_id: String,
    pub cached: bool,
}

const SEP: char = '\u{1f}';

fn fingerprint_complete(req: &CompletionRequest) -> String {
    let p = &req.params;
    format!(
        "complete{SEP}{}{SEP}v{}{SEP}n={};temp={};max={};stop={}{SEP}{}",
        req.template_id,
        req.variant,
        p.sample_count,
        p.temperature,
        p.max_output_tokens,
        p.stop_sequences.join(","),
        req.prompt
    )
}

fn fingerprint_embed(text: &str) -> String {
    format!("embed{SEP}{text}")
}

fn fingerprint_rerank(query: &str, passages: &[String]) -> String {
    format!("rerank{SEP}{query}{SEP}{}", passages.join("\u{1e}"))
}

/// Raw model transport. Implementations return unnormalized vectors and
/// unsorted, index-aligned rerank scores; the gateway post-processes.
pub trait Backend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, request: &CompletionRequest) -> Result<Vec<String>>;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
    fn rerank(&self, query: &str, passages: &[String]) -> Result<Vec<f32>>;
    fn is_live(&self) -> bool {
        false
    }
}

/// Running totals of gateway operations, pre-cache. `hits` counts operations
/// answered from the cache without touching the backend.
#[derive(Debug, Default)]
pub struct CallCounters {
    pub complete: AtomicU64,
    pub embed: AtomicU64,
    pub rerank: AtomicU64,
    pub cache_hits: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CallCounts {
    pub complete: u64,
    pub embed: u64,
    pub rerank: u64,
    pub cache_hits: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.complete + self.embed + self.rerank
    }
}

/// Counting semaphore bounding concurrent backend requests.
struct Limiter {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Limiter {
    fn new(bound: usize) -> Self {
        Limiter {
            permits: Mutex::new(bound.max(1)),
            available: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut permits = self.permits.lock().unwrap();
            while *permits == 0 {
                permits = self.available.wait(permits).unwrap();
            }
            *permits -= 1;
        }
        let out = f();
        *self.permits.lock().unwrap() += 1;
        self.available.notify_one();
        out
    }
}

/// Thread-safe front door to a model backend.
pub struct ModelGateway {
    backend: Arc<dyn Backend>,
    cache: Option<ResponseCache>,
    limiter: Limiter,
    counters: CallCounters,
}

impl ModelGateway {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        ModelGateway {
            backend,
            cache: None,
            limiter: Limiter::new(4),
            counters: CallCounters::default(),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_parallelism(mut self, bound: usize) -> Self {
        self.limiter = Limiter::new(bound);
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn is_live(&self) -> bool {
        self.backend.is_live()
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            complete: self.counters.complete.load(Ordering::Relaxed),
            embed: self.counters.embed.load(Ordering::Relaxed),
            rerank: self.counters.rerank.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
        }
    }

    fn cache_key(&self, fingerprint: &str) -> String {
        cache::digest_key(&self.backend.id(), fingerprint)
    }

    /// Sample `request.params.sample_count` completions.
    pub fn complete(&self, request: &CompletionRequest) -> Result<ModelResponse> {
        if request.prompt.is_empty() {
            return Err(Error::InvalidParams("prompt must be non-empty".into()));
        }
        request.params.validate(self.backend.is_live())?;
        self.counters.complete.fetch_add(1, Ordering::Relaxed);

        let fingerprint = request.fingerprint();
        let key = self.cache_key(&fingerprint);
        if let Some(cache) = &self.cache {
            if let Some(CachedPayload::Texts(texts)) = cache.load(&key)? {
                self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(ModelResponse {
                    texts,
                    backend_id: self.backend.id(),
                    cached: true,
                });
            }
        }

        let texts = self.limiter.run(|| self.backend.complete(request))?;
        if texts.len() != request.params.sample_count as usize {
            return Err(Error::BadResponse(format!(
                "requested {} samples, backend returned {}",
                request.params.sample_count,
                texts.len()
            )));
        }
        if let Some(cache) = &self.cache {
            cache.store(
                &key,
                "complete",
                &self.backend.id(),
                &fingerprint,
                CachedPayload::Texts(texts.clone()),
            )?;
        }
        Ok(ModelResponse {
            texts,
            backend_id: self.backend.id(),
            cached: false,
        })
    }

    /// Embed a batch of texts. Returns one unit-norm vector per input, all of
    /// the same dimension. Each text is cached individually.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        if texts.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidParams(
                "embed inputs must be non-empty".into(),
            ));
        }
        self.counters.embed.fetch_add(1, Ordering::Relaxed);

        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        let mut missing: Vec<usize> = Vec::new();
        if let Some(cache) = &self.cache {
            for (i, text) in texts.iter().enumerate() {
                let key = self.cache_key(&fingerprint_embed(text));
                match cache.load(&key)? {
                    Some(CachedPayload::Vector(v)) => out[i] = Some(v),
                    _ => missing.push(i),
                }
            }
            if missing.is_empty() {
                self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
            }
        } else {
            missing = (0..texts.len()).collect();
        }

        if !missing.is_empty() {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.limiter.run(|| self.backend.embed(&batch))?;
            if vectors.len() != batch.len() {
                return Err(Error::BadResponse(format!(
                    "embedded {} texts, backend returned {} vectors",
                    batch.len(),
                    vectors.len()
                )));
            }
            for (&i, vector) in missing.iter().zip(vectors) {
                if let Some(cache) = &self.cache {
                    let key = self.cache_key(&fingerprint_embed(&texts[i]));
                    cache.store(
                        &key,
                        "embed",
                        &self.backend.id(),
                        &fingerprint_embed(&texts[i]),
                        CachedPayload::Vector(vector.clone()),
                    )?;
                }
                out[i] = Some(vector);
            }
        }

        let mut normalized = Vec::with_capacity(texts.len());
        let mut dimension = None;
        for vector in out.into_iter().map(Option::unwrap) {
            let dim = vector.len();
            match dimension {
                None => dimension = Some(dim),
                Some(expected) if expected != dim => {
                    return Err(Error::BadResponse(format!(
                        "embedding dimension mismatch in batch: {expected} vs {dim}"
                    )));
                }
                _ => {}
            }
            normalized.push(l2_normalize(vector)?);
        }
        Ok(normalized)
    }

    /// Score passages against a query. Returns `(original index, score)`
    /// sorted by score descending, ties broken by ascending index.
    pub fn rerank(&self, query: &str, passages: &[String]) -> Result<Vec<(usize, f32)>> {
        if passages.is_empty() {
            return Err(Error::InvalidParams(
                "rerank needs at least one passage".into(),
            ));
        }
        self.counters.rerank.fetch_add(1, Ordering::Relaxed);

        let fingerprint = fingerprint_rerank(query, passages);
        let key = self.cache_key(&fingerprint);
        let scores = if let Some(Some(CachedPayload::Scores(s))) =
            self.cache.as_ref().map(|c| c.load(&key)).transpose()?
        {
            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
            s
        } else {
            let scores = self.limiter.run(|| self.backend.rerank(query, passages))?;
            if scores.len() != passages.len() {
                return Err(Error::BadResponse(format!(
                    "reranked {} passages, backend returned {} scores",
                    passages.len(),
                    scores.len()
                )));
            }
            if let Some(cache) = &self.cache {
                cache.store(
                    &key,
                    "rerank",
                    &self.backend.id(),
                    &fingerprint,
                    CachedPayload::Scores(scores.clone()),
                )?;
            }
            scores
        };

        let mut ranked: Vec<(usize, f32)> = scores.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(ranked)
    }
}

fn l2_normalize(vector: Vec<f32>) -> Result<Vec<f32>> {
    let norm = vector.iter().map(|x| x * x).sum::<f32>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::BadResponse(
            "embedding vector has zero or non-finite norm".into(),
        ));
    }
    Ok(vector.into_iter().map(|x| x / norm).collect())
}
