//! OpenAI-compatible HTTP backend.
//!
//! Talks to `/chat/completions`, `/embeddings`, and `/rerank` under one base
//! URL. Transient failures (transport errors, 429, 5xx) are retried with
//! bounded exponential backoff before surfacing. API keys come from the
//! environment only.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::gateway::{Backend, CompletionRequest};

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    /// Name of the environment variable holding the API key. Keys never live
    /// in config files.
    pub api_key_env: String,
    pub chat_model: String,
    pub embedding_model: String,
    pub rerank_model: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    /// When false, n samples are fetched as n sequential single-sample
    /// requests with distinct seeds instead of one n-sample request.
    pub multi_sample: bool,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            chat_model: "gpt-4o-mini".into(),
            embedding_model: "text-embedding-3-small".into(),
            rerank_model: "bge-reranker-base".into(),
            timeout_secs: 120,
            max_attempts: 3,
            backoff_base_ms: 1000,
            multi_sample: true,
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        HttpBackend {
            config,
            agent,
            api_key,
        }
    }

    fn url(&self, endpoint: &str) -> String {
        format!("{}/{endpoint}", self.config.base_url.trim_end_matches('/'))
    }

    /// POST with retries on transport failures and 429/5xx statuses.
    fn post(&self, endpoint: &str, body: &serde_json::Value) -> Result<serde_json::Value> {
        let url = self.url(endpoint);
        let mut last_failure = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                let backoff = self.config.backoff_base_ms << (attempt - 1);
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let mut request = self
                .agent
                .post(&url)
                .header("content-type", "application/json");
            if let Some(key) = &self.api_key {
                request = request.header("authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        return response
                            .body_mut()
                            .read_json::<serde_json::Value>()
                            .map_err(|e| Error::BadResponse(format!("{url}: {e}")));
                    }
                    let text = response.body_mut().read_to_string().unwrap_or_default();
                    last_failure = format!(
                        "HTTP {status}: {}",
                        text.chars().take(300).collect::<String>()
                    );
                    if status != 429 && status < 500 {
                        // Client errors other than rate limits will not heal.
                        break;
                    }
                }
                Err(e) => last_failure = e.to_string(),
            }
        }
        Err(Error::Transport {
            attempts: self.config.max_attempts,
            message: format!("{url}: {last_failure}"),
        })
    }

    fn chat_once(
        &self,
        request: &CompletionRequest,
        n: u32,
        seed: Option<u64>,
    ) -> Result<Vec<String>> {
        let mut body = json!({
            "model": self.config.chat_model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_output_tokens,
            "n": n,
        });
        if !request.params.stop_sequences.is_empty() {
            body["stop"] = json!(request.params.stop_sequences);
        }
        if let Some(seed) = seed {
            body["seed"] = json!(seed);
        }
        let value = self.post("chat/completions", &body)?;
        let choices = value
            .get("choices")
            .and_then(|c| c.as_array())
            .ok_or_else(|| Error::BadResponse("chat response has no choices".into()))?;
        let mut texts = Vec::with_capacity(choices.len());
        for choice in choices {
            if choice.get("finish_reason").and_then(|r| r.as_str()) == Some("length") {
                return Err(Error::Truncated {
                    template_id: request.template_id.clone(),
                });
            }
            let content = choice
                .pointer("/message/content")
                .and_then(|c| c.as_str())
                .ok_or_else(|| Error::BadResponse("chat choice has no content".into()))?;
            texts.push(content.to_string());
        }
        Ok(texts)
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> String {
        format!(
            "live:{}+{}+{}@{}",
            self.config.chat_model,
            self.config.embedding_model,
            self.config.rerank_model,
            self.config.base_url
        )
    }

    fn is_live(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest) -> Result<Vec<String>> {
        let n = request.params.sample_count;
        if n == 1 || self.config.multi_sample {
            self.chat_once(request, n, None)
        } else {
            (0..n)
                .map(|i| {
                    let seed = (request.variant as u64) * 10_000 + i as u64;
                    Ok(self.chat_once(request, 1, Some(seed))?.remove(0))
                })
                .collect()
        }
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        #[derive(Deserialize)]
        struct Item {
            index: usize,
            embedding: Vec<f32>,
        }
        let body = json!({"model": self.config.embedding_model, "input": texts});
        let value = self.post("embeddings", &body)?;
        let items: Vec<Item> = serde_json::from_value(
            value
                .get("data")
                .cloned()
                .ok_or_else(|| Error::BadResponse("embedding response has no data".into()))?,
        )?;
        if items.len() != texts.len() {
            return Err(Error::BadResponse(format!(
                "embedding count mismatch: sent {}, got {}",
                texts.len(),
                items.len()
            )));
        }
        let mut out = vec![Vec::new(); texts.len()];
        for item in items {
            if item.index >= out.len() {
                return Err(Error::BadResponse("embedding index out of range".into()));
            }
            out[item.index] = item.embedding;
        }
        Ok(out)
    }

    fn rerank(&self, query: &str, passages: &[String]) -> Result<Vec<f32>> {
        #[derive(Deserialize)]
        struct Item {
            index: usize,
            relevance_score: f32,
        }
        let body = json!({
            "model": self.config.rerank_model,
            "query": query,
            "documents": passages,
        });
        let value = self.post("rerank", &body)?;
        let items: Vec<Item> = serde_json::from_value(
            value
                .get("results")
                .cloned()
                .ok_or_else(|| Error::BadResponse("rerank response has no results".into()))?,
        )?;
        if items.len() != passages.len() {
            return Err(Error::BadResponse(format!(
                "rerank score count mismatch: sent {}, got {}",
                passages.len(),
                items.len()
            )));
        }
        let mut scores = vec![0.0; passages.len()];
        for item in items {
            if item.index >= scores.len() {
                return Err(Error::BadResponse("rerank index out of range".into()));
            }
            scores[item.index] = item.relevance_score;
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serve one canned HTTP response per element of `bodies` (paired with
    /// `statuses`), then stop.
    fn canned_server(
        statuses: Vec<u16>,
        bodies: Vec<String>,
    ) -> (String, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            for (status, body) in statuses.into_iter().zip(bodies) {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 65536];
                let mut read = 0usize;
                // Read until the full request (headers + content-length body) arrived.
                loop {
                    let n = stream.read(&mut buf[read..]).unwrap();
                    read += n;
                    let text = String::from_utf8_lossy(&buf[..read]);
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_length = text
                            .lines()
                            .find_map(|l| {
                                l.to_lowercase()
                                    .strip_prefix("content-length:")
                                    .map(|v| v.trim().parse::<usize>().unwrap())
                            })
                            .unwrap_or(0);
                        if read >= header_end + 4 + content_length {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reason = if status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), handle)
    }

    fn test_config(base_url: String) -> HttpConfig {
        HttpConfig {
            base_url,
            backoff_base_ms: 1,
            ..HttpConfig::default()
        }
    }

    #[test]
    fn parses_chat_choices_in_order() {
        let body = serde_json::json!({
            "choices": [
                {"message": {"content": "first"}, "finish_reason": "stop"},
                {"message": {"content": "second"}, "finish_reason": "stop"},
            ]
        })
        .to_string();
        let (url, handle) = canned_server(vec![200], vec![body]);
        let backend = HttpBackend::new(test_config(url));
        let mut request = CompletionRequest::new("answer", "q");
        request.params.sample_count = 2;
        request.params.temperature = 0.7;
        let texts = backend.complete(&request).unwrap();
        assert_eq!(texts, vec!["first", "second"]);
        handle.join().unwrap();
    }

    #[test]
    fn retries_on_429_then_succeeds() {
        let ok = serde_json::json!({
            "choices": [{"message": {"content": "recovered"}, "finish_reason": "stop"}]
        })
        .to_string();
        let (url, handle) = canned_server(vec![429, 200], vec!["{}".into(), ok]);
        let backend = HttpBackend::new(test_config(url));
        let texts = backend
            .complete(&CompletionRequest::new("answer", "q"))
            .unwrap();
        assert_eq!(texts, vec!["recovered"]);
        handle.join().unwrap();
    }

    #[test]
    fn gives_up_after_bounded_attempts() {
        let (url, handle) = canned_server(vec![500, 500, 500], vec!["{}".into(); 3]);
        let backend = HttpBackend::new(test_config(url));
        let err = backend
            .complete(&CompletionRequest::new("answer", "q"))
            .unwrap_err();
        assert!(matches!(err, Error::Transport { attempts: 3, .. }));
        handle.join().unwrap();
    }

    #[test]
    fn client_errors_are_not_retried() {
        // One canned 400; a retry would hit a closed listener and surface a
        // connect failure instead of the HTTP status.
        let (url, handle) = canned_server(vec![400], vec!["{}".into()]);
        let backend = HttpBackend::new(test_config(url));
        let err = backend
            .complete(&CompletionRequest::new("answer", "q"))
            .unwrap_err();
        assert!(err.to_string().contains("HTTP 400"), "got: {err}");
        handle.join().unwrap();
    }

    #[test]
    fn truncation_is_reported() {
        let body = serde_json::json!({
            "choices": [{"message": {"content": "cut off"}, "finish_reason": "length"}]
        })
        .to_string();
        let (url, handle) = canned_server(vec![200], vec![body]);
        let backend = HttpBackend::new(test_config(url));
        let err = backend
            .complete(&CompletionRequest::new("answer", "q"))
            .unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));
        handle.join().unwrap();
    }

    #[test]
    fn sequential_sampling_uses_distinct_seeds() {
        let body = |text: &str| {
            serde_json::json!({
                "choices": [{"message": {"content": text}, "finish_reason": "stop"}]
            })
            .to_string()
        };
        let (url, handle) = canned_server(vec![200, 200], vec![body("one"), body("two")]);
        let backend = HttpBackend::new(HttpConfig {
            multi_sample: false,
            ..test_config(url)
        });
        let mut request = CompletionRequest::new("answer", "q");
        request.params.sample_count = 2;
        request.params.temperature = 0.7;
        let texts = backend.complete(&request).unwrap();
        assert_eq!(texts, vec!["one", "two"]);
        handle.join().unwrap();
    }

    #[test]
    fn embeddings_realign_by_index() {
        let body = serde_json::json!({
            "data": [
                {"index": 1, "embedding": [0.0, 1.0]},
                {"index": 0, "embedding": [1.0, 0.0]},
            ]
        })
        .to_string();
        let (url, handle) = canned_server(vec![200], vec![body]);
        let backend = HttpBackend::new(test_config(url));
        let vectors = backend.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(vectors, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        handle.join().unwrap();
    }

    #[test]
    fn rerank_scores_realign_by_index() {
        let body = serde_json::json!({
            "results": [
                {"index": 1, "relevance_score": 0.9},
                {"index": 0, "relevance_score": 0.2},
            ]
        })
        .to_string();
        let (url, handle) = canned_server(vec![200], vec![body]);
        let backend = HttpBackend::new(test_config(url));
        let scores = backend.rerank("q", &["a".into(), "b".into()]).unwrap();
        assert_eq!(scores, vec![0.2, 0.9]);
        handle.join().unwrap();
    }
}
