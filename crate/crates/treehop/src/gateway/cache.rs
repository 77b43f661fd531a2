//! Content-addressed on-disk response cache.
//!
//! One JSON record per key under the cache directory. The key is a SHA-256
//! digest of `(backend identity, canonicalized request)`; the record keeps
//! the fingerprint in the clear so cached traffic can be audited. Writes go
//! through a temp file and rename, serialized per process.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn digest_key(backend_id: &str, fingerprint: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(backend_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(fingerprint.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data")]
pub enum CachedPayload {
    Texts(Vec<String>),
    Vector(Vec<f32>),
    Scores(Vec<f32>),
}

/// Audit record stored for each cached response.
#[derive(Debug, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub capability: String,
    pub backend_id: String,
    pub fingerprint: String,
    pub payload: CachedPayload,
}

pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ResponseCache {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &str) -> Result<Option<CachedPayload>> {
        let path = self.record_path(key);
        let bytes = match std::fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let record: CacheRecord = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Cache(format!("corrupt record {}: {e}", path.display())))?;
        Ok(Some(record.payload))
    }

    pub fn store(
        &self,
        key: &str,
        capability: &str,
        backend_id: &str,
        fingerprint: &str,
        payload: CachedPayload,
    ) -> Result<()> {
        let record = CacheRecord {
            key: key.to_string(),
            capability: capability.to_string(),
            backend_id: backend_id.to_string(),
            fingerprint: fingerprint.to_string(),
            payload,
        };
        let bytes = serde_json::to_vec_pretty(&record)?;
        let _guard = self.write_lock.lock().unwrap();
        let path = self.record_path(key);
        let tmp = self.dir.join(format!(".{key}.tmp"));
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}
