//! Tokenization and sliding-window chunking.
//!
//! Run: `cargo run -p treehop --example chunking`

use treehop::retrieval::{chunk_document, tokenize, RetrievalConfig};

fn main() -> treehop::Result<()> {
    let text = "John Cabot was a Venetian navigator. In 1497, sailing for England, \
                he explored parts of the North American coastline and claimed land \
                for the English crown.";

    println!("tokens ({}):", tokenize::token_count(text));
    println!("  {:?}\n", tokenize::token_texts(text));

    // The engine-wide default is 200-token chunks with 100-token overlap;
    // a tiny config makes the sliding window visible here.
    let config = RetrievalConfig {
        chunk_size: 12,
        overlap: 6,
        ..RetrievalConfig::default()
    };
    let chunks = chunk_document("cabot", text, &config)?;
    println!(
        "{} chunks of <= {} tokens, stride {}:",
        chunks.len(),
        config.chunk_size,
        config.chunk_size - config.overlap
    );
    for chunk in &chunks {
        println!(
            "  {} [{:>3}, {:>3})  {:?}",
            chunk.chunk_id, chunk.token_span.0, chunk.token_span.1, chunk.text
        );
    }

    // Every token is covered and consecutive chunks share exactly `overlap`
    // tokens, so no answer span can fall through a boundary.
    for pair in chunks.windows(2) {
        assert_eq!(pair[0].token_span.1 - pair[1].token_span.0, config.overlap);
    }
    Ok(())
}
