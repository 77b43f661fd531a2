//! Smoke run against a live OpenAI-compatible endpoint.
//!
//! Requires `TREEHOP_LIVE_BASE_URL` (and usually `OPENAI_API_KEY`); model
//! names can be overridden with `TREEHOP_LIVE_CHAT_MODEL`,
//! `TREEHOP_LIVE_EMBED_MODEL`, and `TREEHOP_LIVE_RERANK_MODEL`. The endpoint
//! must expose `/chat/completions`, `/embeddings`, and `/rerank`.
//!
//! Run: `TREEHOP_LIVE_BASE_URL=... cargo run -p treehop --example live_smoke`

use std::path::PathBuf;

use treehop::engine::{cmd_eval, Engine};
use treehop::EngineConfig;

fn main() -> anyhow::Result<()> {
    let Ok(base_url) = std::env::var("TREEHOP_LIVE_BASE_URL") else {
        println!("TREEHOP_LIVE_BASE_URL is not set; nothing to do.");
        return Ok(());
    };
    let mut config = EngineConfig {
        backend: "live".into(),
        cache_dir: std::env::temp_dir().join("treehop-live-cache"),
        ..EngineConfig::default()
    };
    config.http.base_url = base_url;
    if let Ok(model) = std::env::var("TREEHOP_LIVE_CHAT_MODEL") {
        config.http.chat_model = model;
    }
    if let Ok(model) = std::env::var("TREEHOP_LIVE_EMBED_MODEL") {
        config.http.embedding_model = model;
    }
    if let Ok(model) = std::env::var("TREEHOP_LIVE_RERANK_MODEL") {
        config.http.rerank_model = model;
    }

    let engine = Engine::new(config)?;
    let dataset =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/smoke_2wikimqa.jsonl");
    let out = std::env::temp_dir().join("treehop-live-out");
    let outcome = cmd_eval(&engine, &dataset, &out, true, None)?;
    print!("{}", outcome.report.render_table());
    println!("{}", outcome.report.summary_line());
    println!("report: {}", outcome.report_path.display());
    Ok(())
}
