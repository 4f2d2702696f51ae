//! Disk cache for chat responses.
//!
//! Chat calls are the expensive, rate-limited part of the pipeline, so
//! every response is cached under a key derived from everything that could
//! change the answer: model, temperature, prompt content, and the request
//! tag (which distinguishes repeated trials at nonzero temperature).
//! Writes go through a temp file plus rename, so a crash mid-write never
//! leaves a truncated entry behind.

use std::path::{Path, PathBuf};
use std::process;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatProvider, ChatRequest, LlmError, LlmResponse};

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Wraps any provider with a directory-backed response cache.
pub struct CachingProvider<P> {
    inner: P,
    dir: PathBuf,
    name: String,
}

/// Stored form of a cached exchange.
#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    raw_text: String,
    provider: String,
    /// Attempts the original live call spent.
    live_attempts: u32,
}

impl<P: ChatProvider> CachingProvider<P> {
    /// Creates the cache directory if needed.
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| LlmError::Cache {
            path: dir.display().to_string(),
            source,
        })?;
        let name = format!("cached-{}", inner.name());
        Ok(Self { inner, dir, name })
    }

    /// Cache key: digest over model, temperature bits, tag, and prompt,
    /// each length-prefixed so field boundaries cannot be confused.
    pub fn cache_key(request: &ChatRequest) -> String {
        let mut hasher = Sha256::new();
        let mut field = |bytes: &[u8]| {
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(bytes);
        };
        field(request.params.model.as_bytes());
        field(&request.params.temperature.to_le_bytes());
        match &request.params.max_tokens {
            Some(m) => field(&m.to_le_bytes()),
            None => field(b""),
        }
        field(request.tag.as_deref().unwrap_or("").as_bytes());
        field(request.prompt.system.as_deref().unwrap_or("").as_bytes());
        field(request.prompt.user.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn read_entry(&self, path: &Path) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(path).ok()?;
        // A corrupt entry is treated as a miss and overwritten.
        serde_json::from_str(&text).ok()
    }

    fn write_entry(&self, path: &Path, entry: &CacheEntry) -> Result<(), LlmError> {
        let text = serde_json::to_string_pretty(entry)
            .map_err(|e| LlmError::Provider(format!("cache serialization: {e}")))?;
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let io = |source: std::io::Error| LlmError::Cache {
            path: path.display().to_string(),
            source,
        };
        std::fs::write(&tmp, text).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}

impl<P: ChatProvider> ChatProvider for CachingProvider<P> {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        let key = Self::cache_key(request);
        let path = self.entry_path(&key);
        if let Some(entry) = self.read_entry(&path) {
            return Ok(LlmResponse {
                raw_text: entry.raw_text,
                parsed: None,
                // Zero live attempts: the answer came from disk.
                attempt_count: 0,
                provider: entry.provider,
            });
        }
        let response = self.inner.chat(request)?;
        self.write_entry(
            &path,
            &CacheEntry {
                raw_text: response.raw_text.clone(),
                provider: response.provider.clone(),
                live_attempts: response.attempt_count,
            },
        )?;
        Ok(response)
    }

    fn name(&self) -> &str {
        &self.name
    }
}
