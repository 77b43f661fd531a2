//! Thin command-line shell around the treehop library.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use treehop::engine::{self, Engine};
use treehop::trace::SolveStatus;
use treehop::EngineConfig;

#[derive(Parser)]
#[command(
    name = "treehop",
    version,
    about = "Multi-hop QA over a local corpus via reasoning trees"
)]
struct Cli {
    #[command(flatten)]
    common: CommonOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML config file (flags override it, it overrides built-in defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Backend: `live` or `scripted:<fixture path>`.
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Response cache directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Disable the response cache.
    #[arg(long, global = true)]
    no_cache: bool,

    /// Maximum concurrent model requests.
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    /// Print the fully resolved configuration and the run manifest.
    #[arg(long, short, global = true)]
    verbose: bool,

    /// Consensus candidate trees per question.
    #[arg(long, global = true)]
    candidates: Option<usize>,

    /// Maximum reasoning-tree depth.
    #[arg(long, global = true)]
    max_depth: Option<usize>,

    /// Answer samples per leaf.
    #[arg(long, global = true)]
    sample_count: Option<u32>,

    /// Maximum refinement rounds.
    #[arg(long, global = true)]
    max_rounds: Option<u32>,

    /// Chunk size in tokens.
    #[arg(long, global = true)]
    chunk_size: Option<usize>,

    /// Chunk overlap in tokens.
    #[arg(long, global = true)]
    overlap: Option<usize>,

    /// Coarse retrieval depth.
    #[arg(long, global = true)]
    coarse_k: Option<usize>,

    /// Rerank depth.
    #[arg(long, global = true)]
    fine_k: Option<usize>,

    /// Context token budget.
    #[arg(long, global = true)]
    context_budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk, embed, and index a corpus file.
    Ingest {
        /// Corpus JSON Lines file.
        #[arg(long)]
        corpus: PathBuf,
        /// Output index artifact path.
        #[arg(long)]
        index: PathBuf,
    },
    /// Answer one question against a prebuilt index.
    Ask {
        question: String,
        #[arg(long)]
        index: PathBuf,
        /// Write the solve trace (JSON Lines) to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a LongBench-format dataset with EM/F1.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Output directory for report.json, manifest.json, and traces.
        #[arg(long, default_value = "eval-out")]
        out: PathBuf,
        /// Also write one trace file per sample.
        #[arg(long)]
        traces: bool,
        /// Retrieve from this shared index instead of each sample's context.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Show the consensus-selected reasoning tree without solving it.
    InspectTree { question: String },
}

fn resolve_config(opts: &CommonOpts) -> anyhow::Result<EngineConfig> {
    let mut config = match &opts.config {
        Some(path) => EngineConfig::load(path).context("loading config file")?,
        None => EngineConfig::default(),
    };
    if let Some(backend) = &opts.backend {
        config.backend = backend.clone();
    }
    if let Some(dir) = &opts.cache_dir {
        config.cache_dir = dir.clone();
    }
    if opts.no_cache {
        config.cache_enabled = false;
    }
    if let Some(parallelism) = opts.parallelism {
        config.parallelism = parallelism;
    }
    if let Some(candidates) = opts.candidates {
        config.candidate_count = candidates;
    }
    if let Some(max_depth) = opts.max_depth {
        config.solver.max_depth = max_depth;
    }
    if let Some(sample_count) = opts.sample_count {
        config.solver.sample_count = sample_count;
    }
    if let Some(max_rounds) = opts.max_rounds {
        config.solver.max_rounds = max_rounds;
    }
    if let Some(chunk_size) = opts.chunk_size {
        config.retrieval.chunk_size = chunk_size;
    }
    if let Some(overlap) = opts.overlap {
        config.retrieval.overlap = overlap;
    }
    if let Some(coarse_k) = opts.coarse_k {
        config.retrieval.coarse_k = coarse_k;
    }
    if let Some(fine_k) = opts.fine_k {
        config.retrieval.fine_k = fine_k;
    }
    if let Some(context_budget) = opts.context_budget {
        config.retrieval.context_budget = context_budget;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let config = resolve_config(&cli.common)?;
    for line in config.overrides() {
        eprintln!("{line}");
    }
    if cli.common.verbose {
        eprintln!("resolved config:\n{}", toml::to_string_pretty(&config)?);
    }
    let engine = Engine::new(config)?;

    match cli.command {
        Command::Ingest { corpus, index } => {
            let outcome = engine::cmd_ingest(&engine, &corpus, &index)?;
            println!(
                "indexed {} documents into {} chunks -> {}",
                outcome.documents,
                outcome.chunks,
                outcome.index_path.display()
            );
            println!("manifest: {}", outcome.manifest_path.display());
        }
        Command::Ask {
            question,
            index,
            trace,
        } => {
            let outcome = engine::cmd_ask(&engine, &question, &index, trace.as_deref())?;
            match (&outcome.answer, outcome.status) {
                (Some(answer), SolveStatus::Answered) => println!("{answer}"),
                (Some(answer), _) => println!(
                    "{answer} (best effort after {} rounds)",
                    outcome.rounds_used
                ),
                (None, _) => println!("[unanswered after {} rounds]", outcome.rounds_used),
            }
            if let Some(path) = &outcome.trace_path {
                println!("trace: {}", path.display());
            }
            match &outcome.manifest_path {
                Some(path) => println!("manifest: {}", path.display()),
                // Keep stdout clean for the answer; the manifest still goes
                // to the run output.
                None => eprintln!("manifest: {}", serde_json::to_string(&outcome.manifest)?),
            }
        }
        Command::Eval {
            dataset,
            out,
            traces,
            index,
        } => {
            let outcome = engine::cmd_eval(&engine, &dataset, &out, traces, index.as_deref())?;
            print!("{}", outcome.report.render_table());
            println!("{}", outcome.report.summary_line());
            println!("report: {}", outcome.report_path.display());
            println!("manifest: {}", outcome.manifest_path.display());
        }
        Command::InspectTree { question } => {
            let outcome = engine::cmd_inspect_tree(&engine, &question)?;
            print!("{}", outcome.rendered);
            println!(
                "signature: depth {}, {} nodes",
                outcome.signature.depth, outcome.signature.node_count
            );
            for (i, candidate) in outcome.consensus.candidates.iter().enumerate() {
                let marker = if i == outcome.consensus.winner_index {
                    " (selected)"
                } else {
                    ""
                };
                match (&candidate.signature, &candidate.error) {
                    (Some(sig), _) => println!(
                        "candidate {i}: depth {}, {} nodes{marker}",
                        sig.depth, sig.node_count
                    ),
                    (None, Some(error)) => println!("candidate {i}: failed ({error})"),
                    (None, None) => println!("candidate {i}: failed"),
                }
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&engine::tree_dump(
                    &outcome.tree,
                    &outcome.consensus
                ))?
            );
            eprintln!("manifest: {}", serde_json::to_string(&outcome.manifest)?);
        }
    }
    Ok(())
}
