//! Chat-model gateway: prompt construction, providers, response parsing,
//! and a disk cache.
//!
//! Everything downstream (homophily estimation, zero-shot labeling) talks
//! to a [`ChatProvider`] trait object, so tests and offline runs swap in
//! the scripted [`mock::MockProvider`] or the label-backed
//! [`mock::OracleProvider`] without touching pipeline code.

pub mod cache;
#[cfg(feature = "http")]
pub mod http;
pub mod mock;
pub mod parse;
pub mod prompt;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::CachingProvider;
#[cfg(feature = "http")]
pub use http::{HttpProvider, HttpProviderConfig};
pub use mock::{MockProvider, OracleProvider};
pub use parse::{majority_vote, parse_class_label, parse_yes_no, Decision, Vote};
pub use prompt::{
    build_node_label_prompt, build_pair_prompt, build_task_adaptive_prompt, RenderedPrompt,
    PAIR_TEMPLATE_VERSION,
};

use crate::defaults;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication rejected: {0}")]
    Credential(String),
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("transient failure: {message}")]
    Transient { message: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error(transparent)]
    Prompt(#[from] prompt::PromptError),
    #[error("response cache i/o on {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LlmError {
    /// Transient failures are worth retrying; everything else is final.
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Transient { .. })
    }
}

/// Decoding controls forwarded to the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            model: "gpt-4o-mini".into(),
            temperature: defaults::CHAT_TEMPERATURE,
            max_tokens: None,
        }
    }
}

/// One chat call. `tag` names the call site (e.g. `pair:3:17:trial:2`) and
/// participates in cache keys, so repeated queries with sampling
/// temperature keep distinct cache slots per trial; it also lets scripted
/// providers answer by call site instead of by prompt text.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub prompt: RenderedPrompt,
    pub params: DecodingParams,
    pub tag: Option<String>,
}

/// A parsed interpretation of a chat response, attached by the caller that
/// knows what question was asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedAnswer {
    ClassId(usize),
    YesNo(bool),
}

/// A chat exchange record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw_text: String,
    /// Filled by the caller after parsing (`None` straight off the wire).
    pub parsed: Option<ParsedAnswer>,
    /// Attempts the provider spent, including retries. `0` means the
    /// response came from the disk cache without a live call.
    pub attempt_count: u32,
    /// Name of the provider that produced the text.
    pub provider: String,
}

/// Anything that can answer chat requests. Implementations must be safe to
/// share across threads; the homophily estimator fans requests out.
pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError>;
    fn name(&self) -> &str;
}

impl<T: ChatProvider + ?Sized> ChatProvider for &T {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        (**self).chat(request)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: ChatProvider + ?Sized> ChatProvider for Box<T> {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        (**self).chat(request)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Exponential backoff schedule for transient failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt (total attempts = `max_retries + 1`).
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: defaults::MAX_RETRIES,
            initial_backoff_ms: defaults::INITIAL_BACKOFF_MS,
            max_backoff_ms: defaults::MAX_BACKOFF_MS,
        }
    }
}

impl RetryPolicy {
    /// No retries, no sleeping; for providers that cannot fail transiently.
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
        }
    }

    /// Backoff before retry number `retry` (0-based): doubles from the
    /// initial value, capped at the maximum.
    pub fn backoff_ms(&self, retry: u32) -> u64 {
        let factor = 1u64 << retry.min(20);
        (self.initial_backoff_ms.saturating_mul(factor)).min(self.max_backoff_ms)
    }
}

/// Runs `attempt(n)` under the retry policy; returns the value and how many
/// attempts were spent. Only transient errors are retried; a zero backoff
/// skips sleeping (used by scripted providers in tests).
pub(crate) fn with_retry<T>(
    policy: &RetryPolicy,
    mut attempt: impl FnMut(u32) -> Result<T, LlmError>,
) -> Result<(T, u32), LlmError> {
    let mut n = 0;
    loop {
        match attempt(n) {
            Ok(value) => return Ok((value, n + 1)),
            Err(err) if err.is_transient() && n < policy.max_retries => {
                let ms = policy.backoff_ms(n);
                if ms > 0 {
                    std::thread::sleep(Duration::from_millis(ms));
                }
                n += 1;
            }
            Err(LlmError::Transient { message }) => {
                return Err(LlmError::Transport {
                    attempts: n + 1,
                    message,
                })
            }
            Err(other) => return Err(other),
        }
    }
}

/// Stable digest of a prompt's visible content. Providers and the cache key
/// responses by this (plus decoding params and tag), so scripted fixtures
/// can address prompts without storing full text.
pub fn prompt_sha256(prompt: &RenderedPrompt) -> String {
    let mut hasher = Sha256::new();
    let system = prompt.system.as_deref().unwrap_or("");
    hasher.update((system.len() as u64).to_le_bytes());
    hasher.update(system.as_bytes());
    hasher.update((prompt.user.len() as u64).to_le_bytes());
    hasher.update(prompt.user.as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retry_spends_attempts_only_on_transient_errors() {
        let policy = RetryPolicy {
            max_retries: 3,
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
        };
        // Two transient failures, then success: three attempts total.
        let mut calls = 0;
        let (value, attempts) = with_retry(&policy, |_| {
            calls += 1;
            if calls <= 2 {
                Err(LlmError::Transient {
                    message: "flaky".into(),
                })
            } else {
                Ok(7)
            }
        })
        .unwrap();
        assert_eq!((value, attempts, calls), (7, 3, 3));
    }

    #[test]
    fn retry_exhaustion_reports_attempt_count() {
        let policy = RetryPolicy {
            max_retries: 2,
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
        };
        let err = with_retry::<()>(&policy, |_| {
            Err(LlmError::Transient {
                message: "down".into(),
            })
        })
        .unwrap_err();
        match err {
            LlmError::Transport { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_transient_errors_fail_immediately() {
        let policy = RetryPolicy::default();
        let mut calls = 0;
        let err = with_retry::<()>(&policy, |_| {
            calls += 1;
            Err(LlmError::Credential("bad key".into()))
        })
        .unwrap_err();
        assert!(matches!(err, LlmError::Credential(_)));
        assert_eq!(calls, 1);
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let policy = RetryPolicy {
            max_retries: 10,
            initial_backoff_ms: 100,
            max_backoff_ms: 1000,
        };
        assert_eq!(policy.backoff_ms(0), 100);
        assert_eq!(policy.backoff_ms(1), 200);
        assert_eq!(policy.backoff_ms(2), 400);
        assert_eq!(policy.backoff_ms(3), 800);
        assert_eq!(policy.backoff_ms(4), 1000);
        assert_eq!(policy.backoff_ms(9), 1000);
    }

    #[test]
    fn prompt_digest_distinguishes_system_from_user() {
        let a = RenderedPrompt {
            system: Some("x".into()),
            user: "y".into(),
        };
        let b = RenderedPrompt {
            system: None,
            user: "xy".into(),
        };
        assert_ne!(prompt_sha256(&a), prompt_sha256(&b));
        assert_eq!(prompt_sha256(&a), prompt_sha256(&a.clone()));
    }
}
