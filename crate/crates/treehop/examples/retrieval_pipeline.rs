//! The full retrieval pipeline: coarse top-k by embedding similarity,
//! reranking, and token-budgeted context assembly.
//!
//! Run: `cargo run -p treehop --example retrieval_pipeline`

use std::sync::Arc;

use treehop::fixtures::navigator;
use treehop::gateway::{ModelGateway, ScriptedOracle};
use treehop::retrieval::{RetrievalConfig, Retriever};

fn main() -> treehop::Result<()> {
    let gateway = Arc::new(ModelGateway::new(Arc::new(ScriptedOracle::permissive(32))));
    let config = RetrievalConfig::default();
    println!(
        "config: chunk {} / overlap {}, coarse k={}, fine k={}, budget {} tokens\n",
        config.chunk_size, config.overlap, config.coarse_k, config.fine_k, config.context_budget
    );

    let retriever = Retriever::build(gateway, config, &navigator::corpus())?;
    let question = "Who explored the eastern coast of North America?";
    let (coarse, fine, bundle) = retriever.retrieve_stages(question)?;

    println!("coarse ranking (dot product):");
    for (chunk_id, similarity) in &coarse {
        println!("  {similarity:>7.4}  {chunk_id}");
    }
    println!("\nfine ranking (reranker scores):");
    for (chunk_id, score) in &fine {
        println!("  {score:>7.4}  {chunk_id}");
    }
    println!(
        "\ncontext bundle: {} chunks, {} / {} tokens",
        bundle.ranked_chunks.len(),
        bundle.total_tokens,
        bundle.budget
    );
    for (chunk_id, _) in &bundle.ranked_chunks {
        let chunk = retriever.chunk(chunk_id).unwrap();
        println!("  [{chunk_id}] {}", &chunk.text[..chunk.text.len().min(70)]);
    }
    Ok(())
}
