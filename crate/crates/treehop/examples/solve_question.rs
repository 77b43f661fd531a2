//! A complete bottom-up solve, including a None-conversion.
//!
//! The deepest sub-question has no answer in the corpus; its parent is
//! converted into a fresh leaf and retrieved directly, and the chain then
//! resolves to the final answer.
//!
//! Run: `cargo run -p treehop --example solve_question`

use std::sync::Arc;

use treehop::fixtures::navigator;
use treehop::gateway::ModelGateway;
use treehop::prompt::TemplateStore;
use treehop::retrieval::{RetrievalConfig, Retriever};
use treehop::solver::{Solver, SolverConfig};
use treehop::trace::EventKind;

fn main() -> treehop::Result<()> {
    let gateway = Arc::new(ModelGateway::new(Arc::new(navigator::oracle())));
    let retriever = Arc::new(Retriever::build(
        gateway.clone(),
        RetrievalConfig::default(),
        &navigator::corpus(),
    )?);
    let solver = Solver::new(
        gateway,
        retriever,
        Arc::new(TemplateStore::builtin()),
        SolverConfig::default(),
        5,
    )?;

    println!("question:\n  {}\n", navigator::QUESTION);
    let (answer, trace) = solver.answer_question(navigator::QUESTION)?;

    for event in trace.events_of(EventKind::NoneConvert) {
        println!(
            "conversion: {} became a new leaf (dropped {}), reason: {}",
            event.node.unwrap(),
            event.payload["dropped"],
            event.payload["reason"]
        );
    }

    println!("\nreasoning steps:");
    for (i, step) in trace.reasoning_steps().iter().enumerate() {
        println!("  step {}: {}", i + 1, step.summary);
    }

    println!(
        "\nfinal answer: {}",
        answer.as_deref().unwrap_or("[unanswered]")
    );
    println!("rounds used: {}", trace.rounds_used);
    Ok(())
}
