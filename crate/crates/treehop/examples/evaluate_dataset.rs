//! Scoring a LongBench-format dataset with EM/F1.
//!
//! The bundled five-sample fixture mixes exact hits, a partial overlap, a
//! wrong answer, and an unanswerable question.
//!
//! Run: `cargo run -p treehop --example evaluate_dataset`

use std::sync::Arc;

use treehop::eval::{EvalRun, RetrievalScope};
use treehop::fixtures::eval5;
use treehop::gateway::ModelGateway;
use treehop::prompt::TemplateStore;
use treehop::retrieval::RetrievalConfig;
use treehop::solver::SolverConfig;

fn main() -> treehop::Result<()> {
    let dir = std::env::temp_dir().join("treehop-example-eval");
    std::fs::create_dir_all(&dir).ok();
    let dataset_path = dir.join("eval5.dataset.jsonl");
    std::fs::write(&dataset_path, eval5::dataset_jsonl()).ok();

    let samples = treehop::eval::load_dataset(&dataset_path)?;
    let run = EvalRun {
        gateway: Arc::new(ModelGateway::new(Arc::new(eval5::oracle()))),
        templates: Arc::new(TemplateStore::builtin()),
        retrieval: RetrievalConfig::default(),
        solver: SolverConfig::default(),
        candidate_count: 5,
        // Each sample retrieves from its own context passages.
        scope: RetrievalScope::PerSample,
        dataset_name: "eval5".into(),
        trace_dir: None,
        parallelism: 2,
    };
    let report = run.run(&samples)?;
    print!("{}", report.render_table());
    println!("{}", report.summary_line());
    Ok(())
}
