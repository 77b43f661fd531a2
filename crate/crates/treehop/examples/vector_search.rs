//! Exact top-k vector search over an embedded corpus.
//!
//! The scripted backend pins an embedding per text, so the ranking below is
//! reproducible; the gateway normalizes every vector, making cosine
//! similarity a plain dot product.
//!
//! Run: `cargo run -p treehop --example vector_search`

use std::sync::Arc;

use treehop::gateway::{ModelGateway, ScriptedOracle};
use treehop::retrieval::{build_index, chunk_document, coarse_retrieve, RetrievalConfig};

fn main() -> treehop::Result<()> {
    let documents = [
        (
            "cabot",
            "John Cabot explored the coast of North America for England.",
        ),
        (
            "salten",
            "Felix Salten wrote novels in Vienna and worked as a critic.",
        ),
        (
            "danube",
            "The Danube flows through Budapest toward the Black Sea.",
        ),
        (
            "mercury",
            "Mercury is the only metal that is liquid at room temperature.",
        ),
    ];
    let query = "Who explored North America?";

    // Hand-placed directions: exploration, literature, geography, chemistry.
    let mut oracle = ScriptedOracle::new();
    oracle.embed_exact(documents[0].1, [0.9, 0.1, 0.2, 0.0]);
    oracle.embed_exact(documents[1].1, [0.1, 0.9, 0.1, 0.0]);
    oracle.embed_exact(documents[2].1, [0.2, 0.1, 0.9, 0.1]);
    oracle.embed_exact(documents[3].1, [0.0, 0.0, 0.1, 0.9]);
    oracle.embed_exact(query, [1.0, 0.0, 0.3, 0.0]);
    let gateway = ModelGateway::new(Arc::new(oracle));

    let mut chunks = Vec::new();
    for (id, text) in documents {
        chunks.extend(chunk_document(id, text, &RetrievalConfig::default())?);
    }
    let index = build_index(&gateway, &chunks)?;
    println!(
        "indexed {} chunks at dimension {}\n",
        index.len(),
        index.dimension()
    );

    let query_vector = gateway.embed(&[query.to_string()])?.remove(0);
    // Exact scan over every entry, no approximation.
    let hits = coarse_retrieve(&index, &query_vector, 3)?;
    println!("top {} for {query:?}:", hits.len());
    for (chunk_id, score) in hits {
        println!("  {score:>7.4}  {chunk_id}");
    }
    Ok(())
}
