//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("template `{id}`: {message}")]
    Template { id: String, message: String },

    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("backend returned an invalid response: {0}")]
    BadResponse(String),

    #[error("completion for template `{template_id}` was truncated at the output token limit")]
    Truncated { template_id: String },

    #[error("scripted oracle has no entry for fingerprint `{fingerprint}`")]
    ScriptedMiss { fingerprint: String },

    #[error("response cache error: {0}")]
    Cache(String),

    #[error("invalid generation params: {0}")]
    InvalidParams(String),

    #[error("model output could not be parsed after re-ask: {0}")]
    Unparseable(String),

    #[error("reasoning tree is invalid: {0}")]
    InvalidTree(String),

    #[error("no decomposition candidate succeeded; the question needs reformulation")]
    ConsensusExhausted,

    #[error("query rewriting produced no usable variants")]
    RewriteExhausted,

    #[error("placeholder `{placeholder}` has no bound answer")]
    UnboundPlaceholder { placeholder: String },

    #[error("index error: {0}")]
    Index(String),

    #[error("dataset `{path}` line {line}: {message}")]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
