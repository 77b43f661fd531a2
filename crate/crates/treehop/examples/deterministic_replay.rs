//! Deterministic replay: two solves over the same scripted fixtures produce
//! byte-identical traces, and the response cache replays live traffic.
//!
//! Run: `cargo run -p treehop --example deterministic_replay`

use std::sync::Arc;

use sha2::{Digest, Sha256};

use treehop::fixtures::navigator;
use treehop::gateway::{ModelGateway, ResponseCache};
use treehop::prompt::TemplateStore;
use treehop::retrieval::{RetrievalConfig, Retriever};
use treehop::solver::{Solver, SolverConfig};

fn solve_once(cache_dir: Option<&std::path::Path>) -> treehop::Result<(String, u64)> {
    let mut gateway = ModelGateway::new(Arc::new(navigator::oracle()));
    if let Some(dir) = cache_dir {
        gateway = gateway.with_cache(ResponseCache::new(dir)?);
    }
    let gateway = Arc::new(gateway);
    let retriever = Arc::new(Retriever::build(
        gateway.clone(),
        RetrievalConfig::default(),
        &navigator::corpus(),
    )?);
    let solver = Solver::new(
        gateway.clone(),
        retriever,
        Arc::new(TemplateStore::builtin()),
        SolverConfig::default(),
        5,
    )?;
    let (_, trace) = solver.answer_question(navigator::QUESTION)?;
    let digest = hex::encode(Sha256::digest(trace.to_jsonl()?.as_bytes()));
    Ok((digest, gateway.counts().cache_hits))
}

fn main() -> treehop::Result<()> {
    let (first, _) = solve_once(None)?;
    let (second, _) = solve_once(None)?;
    println!("trace digest, run 1: {first}");
    println!("trace digest, run 2: {second}");
    assert_eq!(first, second);
    println!("-> byte-identical traces\n");

    // With an on-disk cache the second run answers from disk; the trace is
    // still identical because cache state never leaks into it.
    let dir = tempfile_dir()?;
    let (cold, cold_hits) = solve_once(Some(&dir))?;
    let (warm, warm_hits) = solve_once(Some(&dir))?;
    println!("cold run: {cold_hits} cache hits; warm run: {warm_hits} cache hits");
    assert!(warm_hits > cold_hits);
    assert_eq!(cold, warm);
    println!("-> cache replay preserved the trace digest {warm}");
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

fn tempfile_dir() -> treehop::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("treehop-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| treehop::Error::io(&dir, e))?;
    Ok(dir)
}
