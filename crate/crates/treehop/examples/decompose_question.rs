//! Question analysis and consensus tree selection, without solving.
//!
//! Five candidate decompositions are generated and grouped by their
//! (depth, node count) signature; the most frequent shape wins.
//!
//! Run: `cargo run -p treehop --example decompose_question`

use std::sync::Arc;

use treehop::decompose::Decomposer;
use treehop::fixtures::navigator;
use treehop::gateway::ModelGateway;
use treehop::prompt::TemplateStore;

fn main() -> treehop::Result<()> {
    let gateway = Arc::new(ModelGateway::new(Arc::new(navigator::oracle())));
    let decomposer = Decomposer::new(gateway, Arc::new(TemplateStore::builtin()));

    println!("question:\n  {}\n", navigator::QUESTION);

    let analysis = decomposer.analyze_question(navigator::QUESTION)?;
    println!("core query:  {}", analysis.core_query);
    println!("known:       {}", analysis.known_summary());
    println!("unknown:     {}\n", analysis.unknown_summary());

    let mut events = Vec::new();
    let (tree, report) =
        decomposer.select_consensus_tree(navigator::QUESTION, 5, 4, 0, &mut events)?;

    println!("candidate signatures:");
    for (i, candidate) in report.candidates.iter().enumerate() {
        let marker = if i == report.winner_index {
            "  <- selected"
        } else {
            ""
        };
        match &candidate.signature {
            Some(sig) => println!(
                "  candidate {i}: depth {}, {} nodes{marker}",
                sig.depth, sig.node_count
            ),
            None => println!("  candidate {i}: failed"),
        }
    }

    println!("\nselected tree:\n{}", tree.render());
    println!(
        "signature: depth {}, {} nodes",
        tree.signature().depth,
        tree.signature().node_count
    );
    Ok(())
}
