//! Engine configuration and run manifests.
//!
//! Built-in defaults pin the engine's standard setup (chunk 200/overlap
//! 100, coarse k=45, fine k=15, 3000-token context, 5 consensus candidates
//! and answer samples, up to 3 refinement rounds, max depth 4), so a
//! zero-flag run uses exactly that configuration. Precedence is total:
//! command-line flag > config file > built-in default; every departure from
//! the defaults is echoed in run output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gateway::HttpConfig;
use crate::retrieval::RetrievalConfig;
use crate::solver::SolverConfig;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub retrieval: RetrievalConfig,
    pub solver: SolverConfig,
    /// Candidate trees generated per consensus selection.
    pub candidate_count: usize,
    /// `live` or `scripted:<fixture path>`.
    pub backend: String,
    pub http: HttpConfig,
    pub cache_enabled: bool,
    pub cache_dir: PathBuf,
    /// Directory holding an alternative template set (`<name>.txt` files).
    pub template_dir: Option<PathBuf>,
    /// Version label recorded for a directory template set.
    pub template_version: Option<String>,
    /// Concurrent model requests.
    pub parallelism: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            retrieval: RetrievalConfig::default(),
            solver: SolverConfig::default(),
            candidate_count: 5,
            backend: "live".into(),
            http: HttpConfig::default(),
            cache_enabled: true,
            cache_dir: PathBuf::from(".treehop-cache"),
            template_dir: None,
            template_version: None,
            parallelism: 4,
        }
    }
}

impl EngineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: EngineConfig =
            toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate()?;
        self.solver.validate()?;
        if self.candidate_count < 1 {
            return Err(Error::Config("candidate_count must be >= 1".into()));
        }
        if self.parallelism < 1 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        if self.backend != "live" && !self.backend.starts_with("scripted:") {
            return Err(Error::Config(format!(
                "backend must be `live` or `scripted:<fixture path>`, got `{}`",
                self.backend
            )));
        }
        Ok(())
    }

    /// Fixture path when the backend is scripted.
    pub fn scripted_fixture(&self) -> Option<&Path> {
        self.backend.strip_prefix("scripted:").map(Path::new)
    }

    /// Lines describing every numeric setting that differs from the
    /// built-in defaults.
    pub fn overrides(&self) -> Vec<String> {
        let defaults = EngineConfig::default();
        let mut lines = Vec::new();
        let mut check = |name: &str, got: String, default: String| {
            if got != default {
                lines.push(format!("override: {name} = {got} (default {default})"));
            }
        };
        check(
            "retrieval.chunk_size",
            self.retrieval.chunk_size.to_string(),
            defaults.retrieval.chunk_size.to_string(),
        );
        check(
            "retrieval.overlap",
            self.retrieval.overlap.to_string(),
            defaults.retrieval.overlap.to_string(),
        );
        check(
            "retrieval.coarse_k",
            self.retrieval.coarse_k.to_string(),
            defaults.retrieval.coarse_k.to_string(),
        );
        check(
            "retrieval.fine_k",
            self.retrieval.fine_k.to_string(),
            defaults.retrieval.fine_k.to_string(),
        );
        check(
            "retrieval.context_budget",
            self.retrieval.context_budget.to_string(),
            defaults.retrieval.context_budget.to_string(),
        );
        check(
            "solver.sample_count",
            self.solver.sample_count.to_string(),
            defaults.solver.sample_count.to_string(),
        );
        check(
            "solver.max_rounds",
            self.solver.max_rounds.to_string(),
            defaults.solver.max_rounds.to_string(),
        );
        check(
            "solver.max_depth",
            self.solver.max_depth.to_string(),
            defaults.solver.max_depth.to_string(),
        );
        check(
            "solver.rewrite_attempts",
            self.solver.rewrite_attempts.to_string(),
            defaults.solver.rewrite_attempts.to_string(),
        );
        check(
            "candidate_count",
            self.candidate_count.to_string(),
            defaults.candidate_count.to_string(),
        );
        lines
    }
}

/// Snapshot that makes a run reproducible: the resolved config, template
/// set version, input digests, and engine version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub command: String,
    pub unix_timestamp: u64,
    pub template_version: String,
    pub config: EngineConfig,
    /// Input name -> SHA-256 of the file bytes.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &EngineConfig, template_version: &str) -> Self {
        let unix_timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            engine_version: ENGINE_VERSION.to_string(),
            command: command.to_string(),
            unix_timestamp,
            template_version: template_version.to_string(),
            config: config.clone(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs
            .insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
