use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CompletionRequest;
use crate::fsutil::write_atomic;


/// SHA-256 over the fields that determine a completion.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn of(request: &CompletionRequest) -> Self {
        let mut h = Sha256::new();
        for field in [request.model_id.as_bytes(), request.prompt.as_bytes()] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field);
        }
        h.update((request.max_output_tokens as u64).to_le_bytes());
        h.update(request.temperature.to_bits().to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CacheKey({})", self.hex())
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Stored value: the completion plus the request that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model_id: String,
    pub prompt: String,
    pub max_output_tokens: usize,
    pub temperature: f64,
    pub request_tag: String,
    pub text: String,
}

impl CacheEntry {
    fn matches(&self, request: &CompletionRequest) -> bool {
        self.model_id == request.model_id
            && self.prompt == request.prompt
            && self.max_output_tokens == request.max_output_tokens
            && self.temperature.to_bits() == request.temperature.to_bits()
    }
}

/// Completion cache, either process-local or persisted as one file per
/// digest under `<dir>/<first two hex chars>/<digest>`.
pub enum ResponseCache {
    Memory(Mutex<HashMap<CacheKey, CacheEntry>>),
    Disk(PathBuf),
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache::Memory(Mutex::new(HashMap::new()))
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        ResponseCache::Disk(dir.into())
    }

    pub fn path_for(dir: &Path, key: &CacheKey) -> PathBuf {
        let hex = key.hex();
        dir.join(&hex[..2]).join(hex)
    }

    pub fn get(&self, request: &CompletionRequest) -> Option<String> {
        let key = CacheKey::of(request);
        let entry = match self {
            ResponseCache::Memory(map) => map.lock().expect("cache lock").get(&key).cloned(),
            ResponseCache::Disk(dir) => {
                let path = Self::path_for(dir, &key);
                let bytes = std::fs::read(&path).ok()?;
                match serde_json::from_slice::<CacheEntry>(&bytes) {
                    Ok(entry) => Some(entry),
                    Err(err) => {
                        log::warn!("ignoring unreadable cache file {}: {err}", path.display());
                        None
                    }
                }
            }
        }?;
        entry.matches(request).then_some(entry.text)
    }

    pub fn put(&self, request: &CompletionRequest, text: &str) -> std::io::Result<()> {
        let key = CacheKey::of(request);
        let entry = CacheEntry {
            model_id: request.model_id.clone(),
            prompt: request.prompt.clone(),
            max_output_tokens: request.max_output_tokens,
            temperature: request.temperature,
            request_tag: request.request_tag.clone(),
            text: text.to_owned(),
        };
        match self {
            ResponseCache::Memory(map) => {
                map.lock().expect("cache lock").insert(key, entry);
                Ok(())
            }
            ResponseCache::Disk(dir) => {
                let bytes = serde_json::to_vec_pretty(&entry).map_err(std::io::Error::other)?;
                write_atomic(&Self::path_for(dir, &key), &bytes)
            }
        }
    }
}
