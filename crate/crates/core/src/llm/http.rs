//! HTTP chat provider speaking the OpenAI-compatible chat completion
//! protocol, with retry/backoff on transient failures.
//!
//! Only this module touches the network; it is feature-gated (`http`) so
//! the rest of the crate builds and tests fully offline.

use std::time::Duration;

use serde_json::{json, Value};

use super::{with_retry, ChatProvider, ChatRequest, LlmError, LlmResponse, RetryPolicy};

/// Connection settings for an OpenAI-compatible endpoint.
#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Full URL of the chat completions route, e.g.
    /// `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    /// Bearer token; `None` sends no Authorization header (local servers).
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key: None,
            retry: RetryPolicy::default(),
            timeout_secs: 60,
        }
    }
}

pub struct HttpProvider {
    agent: ureq::Agent,
    config: HttpProviderConfig,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            // Status handling is ours: 429/5xx retry, 401/403 abort.
            .http_status_as_error(false)
            .build();
        Self {
            agent: agent_config.into(),
            config,
        }
    }

    fn body_for(request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.prompt.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.prompt.user}));
        let mut body = json!({
            "model": request.params.model,
            "temperature": request.params.temperature,
            "messages": messages,
        });
        if let Some(max_tokens) = request.params.max_tokens {
            body["max_tokens"] = json!(max_tokens);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, LlmError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = req.send_json(body).map_err(|e| LlmError::Transient {
            message: format!("request failed: {e}"),
        })?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err(LlmError::Credential(format!(
                    "endpoint returned HTTP {status}"
                )))
            }
            408 | 429 | 500..=599 => {
                return Err(LlmError::Transient {
                    message: format!("HTTP {status}"),
                })
            }
            other => {
                let detail = response.body_mut().read_to_string().unwrap_or_default();
                return Err(LlmError::Provider(format!(
                    "HTTP {other}: {}",
                    detail.chars().take(200).collect::<String>()
                )));
            }
        }
        let parsed: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transient {
                message: format!("unreadable response body: {e}"),
            })?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Provider("response has no choices[0].message.content".into()))
    }
}

impl ChatProvider for HttpProvider {
    fn chat(&self, request: &ChatRequest) -> Result<LlmResponse, LlmError> {
        let body = Self::body_for(request);
        let (raw_text, attempt_count) = with_retry(&self.config.retry, |_| self.attempt(&body))?;
        Ok(LlmResponse {
            raw_text,
            parsed: None,
            attempt_count,
            provider: self.name().into(),
        })
    }

    fn name(&self) -> &str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{DecodingParams, RenderedPrompt};

    #[test]
    fn request_body_layout() {
        let request = ChatRequest {
            prompt: RenderedPrompt {
                system: Some("sys".into()),
                user: "hello".into(),
            },
            params: DecodingParams {
                model: "test-model".into(),
                temperature: 0.5,
                max_tokens: Some(16),
            },
            tag: None,
        };
        let body = HttpProvider::body_for(&request);
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.5);
        assert_eq!(body["max_tokens"], 16);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], "sys");
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "hello");
    }

    #[test]
    fn request_body_omits_absent_fields() {
        let request = ChatRequest {
            prompt: RenderedPrompt {
                system: None,
                user: "hi".into(),
            },
            params: DecodingParams {
                model: "m".into(),
                temperature: 0.0,
                max_tokens: None,
            },
            tag: None,
        };
        let body = HttpProvider::body_for(&request);
        assert!(body.get("max_tokens").is_none());
        assert_eq!(body["messages"].as_array().unwrap().len(), 1);
        assert_eq!(body["messages"][0]["role"], "user");
    }
}
