//! treehop answers multi-hop questions over a local corpus by decomposing
//! them into consensus-validated reasoning trees and solving the trees
//! bottom-up over a retrieve-rerank-generate pipeline.
//!
//! The flow for one question:
//!
//! 1. **Decompose** ([`decompose`]): analyze the question into core query /
//!    known entities / unknown entities, recursively split it into a tree of
//!    sub-questions (sequential children may reference earlier siblings'
//!    answers via `[answer from Nk]` placeholders), generate several
//!    candidate trees, and keep the most frequent `(depth, node count)`
//!    configuration.
//! 2. **Solve** ([`solver`]): walk the tree post-order. Leaves retrieve
//!    evidence (coarse top-k by embedding similarity, reranked, packed under
//!    a token budget — [`retrieval`]) and sample several answers, keeping
//!    the most frequent normalized form. An insufficient-evidence result
//!    triggers query rewrites, then restructures the tree: the failing
//!    region collapses into a fresh leaf that is retrieved directly.
//!    Parents aggregate their children's answers.
//! 3. **Refine**: if the whole tree yields nothing, the question is
//!    reformulated and the process repeats, up to a bounded number of
//!    rounds.
//!
//! Every step is recorded in a [`trace::SolveTrace`]; with the scripted
//! backend ([`gateway::ScriptedOracle`]) whole runs replay byte-identically.
//! [`eval`] scores predictions with SQuAD-style EM/F1 over LongBench-format
//! datasets.
//!
//! Start with the runnable examples (`cargo run -p treehop --example ...`):
//! each major capability has one. The `treehop` binary wraps the same
//! library surface as `ingest` / `ask` / `eval` / `inspect-tree`.

pub mod config;
pub mod decompose;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod gateway;
pub mod prompt;
pub mod retrieval;
pub mod solver;
pub mod trace;

pub use config::{EngineConfig, RunManifest, ENGINE_VERSION};
pub use engine::{cmd_ask, cmd_eval, cmd_ingest, cmd_inspect_tree, Engine};
pub use error::{Error, Result};
