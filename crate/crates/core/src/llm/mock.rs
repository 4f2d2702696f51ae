//! Offline chat providers: a scripted mock for tests and fixtures, and a
//! label-backed oracle for controlled benchmarks.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{
    prompt_sha256, with_retry, ChatProvider, ChatRequest, LlmError, LlmResponse, RetryPolicy,
};

/// A deterministic scripted provider.
///
/// Responses resolve in order: by request tag, then by prompt digest
/// ([`prompt_sha256`]), then the default response; an unmatched request is
/// a provider error so fixtures fail loudly instead of silently answering.
/// Transient failures can be injected to exercise retry paths.
pub struct MockProvider {
    by_tag: HashMap<String, String>,
    by_prompt: HashMap<String, String>,
    default: Option<String>,
    /// Remaining injected transient failures, consumed one per attempt.
    fail_next: Mutex<u32>,
    retry: RetryPolicy,
}

/// On-disk fixture format for [`MockProvider::from_json_file`].
#[derive(Debug, Deserialize)]
struct MockFixture {
    #[serde(default)]
    by_tag: HashMap<String, String>,
    #[serde(default)]
    by_prompt_sha256: HashMap<String, String>,
    #[serde(default)]
    default: Option<String>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self {
            by_tag: HashMap::new(),
            by_prompt: HashMap::new(),
            default: None,
            fail_next: Mutex::new(0),
            // Zero backoff: retry paths run instantly in tests.
            retry: RetryPolicy {
                max_retries: RetryPolicy::default().max_retries,
                initial_backoff_ms: 0,
                max_backoff_ms: 0,
            },
        }
    }

    /// Answers every otherwise-unmatched request with `response`.
    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    pub fn insert_tag(&mut self, tag: impl Into<String>, response: impl Into<String>) {
        self.by_tag.insert(tag.into(), response.into());
    }

    /// Scripts a response for an exact rendered prompt.
    pub fn insert_prompt(&mut self, prompt: &super::RenderedPrompt, response: impl Into<String>) {
        self.by_prompt
            .insert(prompt_sha256(prompt), response.into());
    }

    /// The next `n` chat attempts fail transiently before any lookup.
    pub fn fail_next_requests(&self, n: u32) {
        *self.fail_next.lock().unwrap() = n;
    }

    /// Loads a fixture: `{"by_tag": {...}, "by_prompt_sha256": {...},
    /// "default": "..."}`, all keys optional.
    pub fn from_json_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|source| LlmError::Cache {
            path: path.display().to_string(),
            source,
        })?;
        let fixture: MockFixture = serde_json::from_str(&text).map_err(|e| {
            LlmError::Provider(format!("invalid mock fixture {}: {e}", path.display()))
        })?;
        let mut mock = Self::new();
        mock.by_tag = fixture.by_tag;
        mock.by_prompt = fixture.by_prompt_sha256;
        mock.default = fixture.default;
        Ok(mock)
    }

    fn lookup(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if let Some(tag) = &request.tag {
            if let Some(r) = self.by_tag.get(tag) {
                return Ok(r.clone());
            }
        }
        if let Some(r) = self.by_prompt.get(&prompt_sha256(&request.prompt)) {
            return Ok(r.clone());
        }
        if let Some(r) = &self.default {
            return Ok(r.clone());
        }
        Err(LlmError::Provider(format!(
            "no scripted response for tag {:?}",
            request.tag
        )))
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl ChatProvider for MockProvider {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        let (raw_text, attempt_count) = with_retry(&self.retry, |_| {
            {
                let mut remaining = self.fail_next.lock().unwrap();
                if *remaining > 0 {
                    *remaining -= 1;
                    return Err(LlmError::Transient {
                        message: "injected failure".into(),
                    });
                }
            }
            self.lookup(request)
        })?;
        Ok(LlmResponse {
            raw_text,
            parsed: None,
            attempt_count,
            provider: self.name().into(),
        })
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Answers from ground-truth labels, addressed by request tag.
///
/// Understands the pipeline's tag shapes:
///
/// * `pair:{i}:{j}:...`: "Yes" when nodes `i` and `j` share a label;
/// * `node:{i}:...`: the class name of node `i`'s label.
///
/// This stands in for a perfectly accurate chat model, which makes it the
/// reference point for benchmark suites: estimator error measured against
/// it is pure sampling error.
pub struct OracleProvider {
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl OracleProvider {
    pub fn new(labels: Vec<usize>, class_names: Vec<String>) -> Self {
        Self {
            labels,
            class_names,
        }
    }

    fn node(&self, field: &str) -> Result<usize, LlmError> {
        let id: usize = field
            .parse()
            .map_err(|_| LlmError::Provider(format!("bad node id {field:?} in tag")))?;
        if id >= self.labels.len() {
            return Err(LlmError::Provider(format!("node id {id} out of range")));
        }
        Ok(id)
    }
}

impl ChatProvider for OracleProvider {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        let tag = request
            .tag
            .as_deref()
            .ok_or_else(|| LlmError::Provider("oracle provider requires a request tag".into()))?;
        let parts: Vec<&str> = tag.split(':').collect();
        let raw_text = match parts.as_slice() {
            ["pair", i, j, ..] => {
                if self.labels[self.node(i)?] == self.labels[self.node(j)?] {
                    "Yes".to_string()
                } else {
                    "No".to_string()
                }
            }
            ["node", i, ..] => {
                let label = self.labels[self.node(i)?];
                self.class_names
                    .get(label)
                    .cloned()
                    .ok_or_else(|| LlmError::Provider(format!("no class name for label {label}")))?
            }
            _ => {
                return Err(LlmError::Provider(format!(
                    "oracle provider cannot answer tag {tag:?}"
                )))
            }
        };
        Ok(LlmResponse {
            raw_text,
            parsed: None,
            attempt_count: 1,
            provider: self.name().into(),
        })
    }

    fn name(&self) -> &str {
        "oracle"
    }
}
