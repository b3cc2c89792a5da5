//! Single abstraction over completion providers: an HTTP chat-completions
//! backend, a deterministic scripted mock, and a record/replay cache wrapper.
//! The gateway also keeps the per-run token ledger.

mod http;
mod mock;
mod replay;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockPolicy, MockRule};
pub use replay::{ReplayBackend, ReplayMode};

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// 64-bit FNV-1a over UTF-8 bytes.
pub fn fnv64(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// `fnv64` rendered as 16 hex digits. Used for prompt/completion digests and
/// replay-cache keys.
pub fn digest64(text: &str) -> String {
    format!("{:016x}", fnv64(text))
}

/// Whitespace token count, the documented approximation when a provider
/// reports no usage.
pub fn approx_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            temperature: 0.0,
            max_tokens: 1024,
            seed: None,
        }
    }

    /// Content-addressed cache key: any change to prompt, temperature,
    /// max_tokens, or seed changes the key.
    pub fn cache_key(&self) -> String {
        let material = format!(
            "{}\u{1f}{}\u{1f}{}\u{1f}{}",
            self.prompt,
            self.temperature,
            self.max_tokens,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        );
        digest64(&material)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub provider_id: String,
}

/// A completion provider.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse>;
}

/// One gateway call, as recorded in the call log.
#[derive(Debug, Clone)]
pub struct CallRecord {
    pub prompt_digest: String,
    pub completion_digest: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// Backend wrapper that records every call for token accounting and
/// trajectory digests. Safe for concurrent callers.
pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    log: Mutex<Vec<CallRecord>>,
}

impl Gateway {
    pub fn new(backend: Box<dyn CompletionBackend>) -> Self {
        Gateway {
            backend,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let resp = self.backend.complete(req)?;
        self.log.lock().unwrap().push(CallRecord {
            prompt_digest: digest64(&req.prompt),
            completion_digest: digest64(&resp.text),
            tokens_in: resp.tokens_in,
            tokens_out: resp.tokens_out,
        });
        Ok(resp)
    }

    pub fn call_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    /// Calls made since the given log position.
    pub fn calls_since(&self, from: usize) -> Vec<CallRecord> {
        self.log.lock().unwrap()[from..].to_vec()
    }

    /// (tokens_in, tokens_out) summed over every call so far.
    pub fn total_tokens(&self) -> (u64, u64) {
        let log = self.log.lock().unwrap();
        (
            log.iter().map(|c| c.tokens_in).sum(),
            log.iter().map(|c| c.tokens_out).sum(),
        )
    }
}
