//! Wiring and the operations behind the CLI commands.
//!
//! `Engine` resolves a configuration into a gateway + template store pair;
//! the `cmd_*` functions implement `ingest`, `ask`, `eval`, and
//! `inspect-tree` on top of it and are what both the binary and integration
//! tests call.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{EngineConfig, RunManifest};
use crate::decompose::{ConsensusReport, ReasoningTree, TreeSignature};
use crate::error::{Error, Result};
use crate::eval::{load_dataset, EvalReport, EvalRun, RetrievalScope};
use crate::gateway::{Backend, HttpBackend, ModelGateway, ResponseCache, ScriptedOracle};
use crate::prompt::TemplateStore;
use crate::retrieval::{load_corpus, IndexArtifact, Retriever};
use crate::solver::Solver;
use crate::trace::{SolveStatus, SolveTrace};

pub struct Engine {
    pub config: EngineConfig,
    pub gateway: Arc<ModelGateway>,
    pub templates: Arc<TemplateStore>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let backend: Arc<dyn Backend> = match config.scripted_fixture() {
            Some(fixture) => Arc::new(ScriptedOracle::from_path(fixture)?),
            None => Arc::new(HttpBackend::new(config.http.clone())),
        };
        let mut gateway = ModelGateway::new(backend).with_parallelism(config.parallelism);
        if config.cache_enabled {
            gateway = gateway.with_cache(ResponseCache::new(&config.cache_dir)?);
        }
        let templates = match &config.template_dir {
            Some(dir) => {
                let version = config
                    .template_version
                    .clone()
                    .unwrap_or_else(|| dir.display().to_string());
                TemplateStore::from_dir(dir, version)?
            }
            None => TemplateStore::builtin(),
        };
        Ok(Engine {
            config,
            gateway: Arc::new(gateway),
            templates: Arc::new(templates),
        })
    }

    pub fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, &self.config, self.templates.version())
    }

    pub fn retriever_from_index(&self, index_path: &Path) -> Result<Arc<Retriever>> {
        let artifact = IndexArtifact::load(index_path)?;
        Ok(Arc::new(Retriever::from_artifact(
            self.gateway.clone(),
            artifact,
        )))
    }

    pub fn solver(&self, retriever: Arc<Retriever>) -> Result<Solver> {
        Solver::new(
            self.gateway.clone(),
            retriever,
            self.templates.clone(),
            self.config.solver.clone(),
            self.config.candidate_count,
        )
    }
}

pub struct IngestOutcome {
    pub documents: usize,
    pub chunks: usize,
    pub index_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Chunk, embed, and index a corpus file, writing the index artifact and a
/// manifest next to it. Failures leave no partial artifact behind.
pub fn cmd_ingest(engine: &Engine, corpus_path: &Path, index_path: &Path) -> Result<IngestOutcome> {
    let documents = load_corpus(corpus_path)?;
    let retriever = Retriever::build(
        engine.gateway.clone(),
        engine.config.retrieval.clone(),
        &documents,
    )?;
    if retriever.chunk_count() == 0 {
        return Err(Error::Index("corpus produced no chunks".into()));
    }
    let artifact = retriever.artifact();
    let tmp = index_path.with_extension("tmp");
    artifact.save(&tmp)?;
    std::fs::rename(&tmp, index_path).map_err(|e| Error::io(index_path, e))?;

    let mut manifest = engine.manifest("ingest");
    manifest.record_input("corpus", corpus_path)?;
    manifest.record_input("index", index_path)?;
    let manifest_path = manifest_sibling(index_path);
    manifest.save(&manifest_path)?;
    Ok(IngestOutcome {
        documents: documents.len(),
        chunks: retriever.chunk_count(),
        index_path: index_path.to_path_buf(),
        manifest_path,
    })
}

fn manifest_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub struct AskOutcome {
    pub answer: Option<String>,
    pub status: SolveStatus,
    pub rounds_used: u32,
    pub trace: SolveTrace,
    pub trace_path: Option<PathBuf>,
    pub manifest: RunManifest,
    pub manifest_path: Option<PathBuf>,
}

/// Answer one question against a prebuilt index, optionally writing the
/// trace (and a manifest beside it).
pub fn cmd_ask(
    engine: &Engine,
    question: &str,
    index_path: &Path,
    trace_path: Option<&Path>,
) -> Result<AskOutcome> {
    let retriever = engine.retriever_from_index(index_path)?;
    let solver = engine.solver(retriever)?;
    let (answer, trace) = solver.answer_question(question)?;
    let mut manifest = engine.manifest("ask");
    manifest.record_input("index", index_path)?;
    let mut manifest_path = None;
    if let Some(path) = trace_path {
        trace.write_jsonl(path)?;
        let sibling = manifest_sibling(path);
        manifest.save(&sibling)?;
        manifest_path = Some(sibling);
    }
    Ok(AskOutcome {
        answer,
        status: trace.status,
        rounds_used: trace.rounds_used,
        trace_path: trace_path.map(Path::to_path_buf),
        trace,
        manifest,
        manifest_path,
    })
}

#[derive(Debug)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub report_path: PathBuf,
    pub manifest_path: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

/// Score a dataset, writing `report.json`, optional per-sample traces, and
/// `manifest.json` into the output directory.
pub fn cmd_eval(
    engine: &Engine,
    dataset_path: &Path,
    out_dir: &Path,
    write_traces: bool,
    shared_index: Option<&Path>,
) -> Result<EvalOutcome> {
    let samples = load_dataset(dataset_path)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scope = match shared_index {
        Some(index_path) => RetrievalScope::Shared(engine.retriever_from_index(index_path)?),
        None => RetrievalScope::PerSample,
    };
    let trace_dir = write_traces.then(|| out_dir.join("traces"));
    let dataset_name = dataset_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".into());
    let run = EvalRun {
        gateway: engine.gateway.clone(),
        templates: engine.templates.clone(),
        retrieval: engine.config.retrieval.clone(),
        solver: engine.config.solver.clone(),
        candidate_count: engine.config.candidate_count,
        scope,
        dataset_name,
        trace_dir: trace_dir.clone(),
        parallelism: engine.config.parallelism,
    };
    let report = run.run(&samples)?;
    let report_path = out_dir.join("report.json");
    report.save(&report_path)?;
    let mut manifest = engine.manifest("eval");
    manifest.record_input("dataset", dataset_path)?;
    if let Some(index_path) = shared_index {
        manifest.record_input("index", index_path)?;
    }
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(EvalOutcome {
        report,
        report_path,
        manifest_path,
        trace_dir,
    })
}

pub struct InspectOutcome {
    pub rendered: String,
    pub signature: TreeSignature,
    pub consensus: ConsensusReport,
    pub tree: ReasoningTree,
    pub manifest: RunManifest,
}

/// Run analysis and consensus selection only (no solving) and report the
/// chosen tree plus the losing candidates' signatures.
pub fn cmd_inspect_tree(engine: &Engine, question: &str) -> Result<InspectOutcome> {
    let solver = engine.solver(Arc::new(Retriever::build(
        engine.gateway.clone(),
        engine.config.retrieval.clone(),
        &[],
    )?))?;
    let mut events = Vec::new();
    let (tree, consensus) = solver.decomposer().select_consensus_tree(
        question,
        engine.config.candidate_count,
        engine.config.solver.max_depth,
        0,
        &mut events,
    )?;
    Ok(InspectOutcome {
        rendered: tree.render(),
        signature: tree.signature(),
        consensus,
        tree,
        manifest: engine.manifest("inspect-tree"),
    })
}

/// Machine-readable dump of a tree: nodes, edges, signature.
pub fn tree_dump(tree: &ReasoningTree, consensus: &ConsensusReport) -> serde_json::Value {
    let nodes: Vec<serde_json::Value> = tree
        .node_ids()
        .into_iter()
        .map(|id| {
            let node = tree.node(id).unwrap();
            serde_json::json!({
                "id": id.to_string(),
                "question": node.question_template,
                "pattern": node.pattern,
                "children": node.children.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "leaf_kind": node.leaf_kind,
            })
        })
        .collect();
    serde_json::json!({
        "root": tree.root().to_string(),
        "signature": tree.signature(),
        "nodes": nodes,
        "consensus": consensus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{author, eval5, navigator};

    fn scripted_engine(oracle: &ScriptedOracle, dir: &Path, cache: bool) -> Engine {
        let fixture = dir.join("oracle.jsonl");
        oracle.save(&fixture).unwrap();
        let config = EngineConfig {
            backend: format!("scripted:{}", fixture.display()),
            cache_enabled: cache,
            cache_dir: dir.join("cache"),
            ..EngineConfig::default()
        };
        Engine::new(config).unwrap()
    }

    fn write_corpus(dir: &Path, documents: &[crate::retrieval::Document]) -> PathBuf {
        let path = dir.join("corpus.jsonl");
        let lines: Vec<String> = documents
            .iter()
            .map(|d| serde_json::to_string(d).unwrap())
            .collect();
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        path
    }

    #[test]
    fn ingest_reports_counts_and_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&navigator::oracle(), dir.path(), false);
        let corpus = write_corpus(dir.path(), &navigator::corpus());
        let index = dir.path().join("index.json");
        let outcome = cmd_ingest(&engine, &corpus, &index).unwrap();
        assert_eq!(outcome.documents, 3);
        assert_eq!(outcome.chunks, 3);
        assert!(outcome.index_path.exists());
        assert!(outcome.manifest_path.exists());
    }

    #[test]
    fn ingest_empty_corpus_fails() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&navigator::oracle(), dir.path(), false);
        let corpus = dir.path().join("empty.jsonl");
        std::fs::write(&corpus, "").unwrap();
        let index = dir.path().join("index.json");
        assert!(cmd_ingest(&engine, &corpus, &index).is_err());
        assert!(!index.exists());
    }

    #[test]
    fn reingesting_yields_identical_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&navigator::oracle(), dir.path(), false);
        let corpus = write_corpus(dir.path(), &navigator::corpus());
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        cmd_ingest(&engine, &corpus, &a).unwrap();
        cmd_ingest(&engine, &corpus, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn ask_answers_the_author_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&author::oracle(), dir.path(), true);
        let corpus = write_corpus(dir.path(), &author::corpus());
        let index = dir.path().join("index.json");
        cmd_ingest(&engine, &corpus, &index).unwrap();
        let trace_path = dir.path().join("run.trace.jsonl");
        let outcome = cmd_ask(&engine, author::QUESTION, &index, Some(&trace_path)).unwrap();
        assert_eq!(outcome.answer.as_deref(), Some("Vienna"));
        assert_eq!(outcome.status, SolveStatus::Answered);
        assert!(trace_path.exists());
        assert!(outcome.manifest_path.unwrap().exists());
        let parsed =
            SolveTrace::from_jsonl(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
        assert_eq!(parsed.final_answer.as_deref(), Some("Vienna"));
    }

    #[test]
    fn eval_writes_report_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&eval5::oracle(), dir.path(), true);
        let dataset = dir.path().join("dataset.jsonl");
        std::fs::write(&dataset, eval5::dataset_jsonl()).unwrap();
        let out = dir.path().join("out");
        let outcome = cmd_eval(&engine, &dataset, &out, true, None).unwrap();
        assert_eq!(outcome.report.summary_line(), "F1 50.00 EM 40.00");
        assert!(outcome.report_path.exists());
        assert!(outcome.manifest_path.exists());
        let traces = std::fs::read_dir(outcome.trace_dir.unwrap())
            .unwrap()
            .count();
        assert_eq!(traces, 5);
        let reparsed = EvalReport::load(&outcome.report_path).unwrap();
        assert_eq!(reparsed, outcome.report);
    }

    #[test]
    fn eval_missing_dataset_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&eval5::oracle(), dir.path(), false);
        let missing = dir.path().join("nope.jsonl");
        let err = cmd_eval(&engine, &missing, &dir.path().join("out"), false, None).unwrap_err();
        assert!(err.to_string().contains("nope.jsonl"));
    }

    #[test]
    fn inspect_tree_reports_signature_and_tally() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&navigator::oracle(), dir.path(), true);
        let outcome = cmd_inspect_tree(&engine, navigator::QUESTION).unwrap();
        assert_eq!(
            outcome.signature,
            TreeSignature {
                depth: 4,
                node_count: 7
            }
        );
        assert_eq!(outcome.consensus.candidates.len(), 5);
        assert!(outcome.rendered.contains("N1"));
        assert!(outcome.rendered.contains("N6"));
        let dump = tree_dump(&outcome.tree, &outcome.consensus);
        assert_eq!(dump["nodes"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn inspect_tree_author_scenario_is_depth_two() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&author::oracle(), dir.path(), false);
        let outcome = cmd_inspect_tree(&engine, author::QUESTION).unwrap();
        assert_eq!(
            outcome.signature,
            TreeSignature {
                depth: 2,
                node_count: 3
            }
        );
    }

    #[test]
    fn inspect_tree_single_hop_is_one_node() {
        let dir = tempfile::tempdir().unwrap();
        // The eval5 oracle decomposes everything as direct.
        let engine = scripted_engine(&eval5::oracle(), dir.path(), false);
        let outcome =
            cmd_inspect_tree(&engine, "Which metal is liquid at room temperature?").unwrap();
        assert_eq!(
            outcome.signature,
            TreeSignature {
                depth: 1,
                node_count: 1
            }
        );
        assert!(outcome.rendered.contains("N0"));
    }

    #[test]
    fn index_version_mismatch_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let engine = scripted_engine(&navigator::oracle(), dir.path(), false);
        let corpus = write_corpus(dir.path(), &navigator::corpus());
        let index = dir.path().join("index.json");
        cmd_ingest(&engine, &corpus, &index).unwrap();
        let mut value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&index).unwrap()).unwrap();
        value["format_version"] = serde_json::json!(99);
        std::fs::write(&index, value.to_string()).unwrap();
        assert!(engine.retriever_from_index(&index).is_err());
    }
}
