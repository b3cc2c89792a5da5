//! Chat-completions HTTP backend. Single user message, retries with
//! exponential backoff on transport and 5xx errors.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::{approx_tokens, CompletionBackend, CompletionRequest, CompletionResponse};

/// Env var holding the API key.
pub const API_KEY_VAR: &str = "AGENT_LLM_API_KEY";

const MAX_ATTEMPTS: u32 = 3;

pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    /// Base backoff; kept short in tests.
    backoff: Duration,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpBackend {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_VAR).ok(),
            client: reqwest::blocking::Client::new(),
            backoff: Duration::from_millis(500),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, req: &CompletionRequest) -> std::result::Result<CompletionResponse, String> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(format!("server error {status}"));
        }
        if !status.is_success() {
            // 4xx will not improve on retry; surface it as a hard failure.
            return Err(format!("http error {status} (not retried)"));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| format!("bad json: {e}"))?;
        let text = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| "empty choices".to_string())?;
        let (tokens_in, tokens_out) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (approx_tokens(&req.prompt), approx_tokens(&text)),
        };
        Ok(CompletionResponse {
            text,
            tokens_in,
            tokens_out,
            provider_id: format!("http:{}", self.model),
        })
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let mut last_err = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            match self.attempt(req) {
                Ok(resp) => return Ok(resp),
                Err(e) => {
                    let retryable = !e.contains("not retried");
                    last_err = e;
                    if !retryable {
                        break;
                    }
                    if attempt + 1 < MAX_ATTEMPTS {
                        std::thread::sleep(self.backoff * 2u32.pow(attempt));
                    }
                }
            }
        }
        Err(Error::ProviderUnavailable(last_err))
    }
}
