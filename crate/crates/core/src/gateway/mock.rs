//! Deterministic scripted backend. An ordered rule list maps prompt regexes
//! to response templates; a per-rule call counter serves sequenced responses.
//! Response templates may reference capture groups as `$1`..`$9`.

use std::sync::Mutex;

use regex::Regex;
use serde::Deserialize;

use crate::error::{Error, Result};

use super::{approx_tokens, digest64, CompletionBackend, CompletionRequest, CompletionResponse};

#[derive(Debug, Clone)]
pub struct MockRule {
    pub pattern: Regex,
    /// Served in order by the rule's call counter; the last one repeats.
    pub responses: Vec<String>,
}

impl MockRule {
    pub fn new(pattern: &str, responses: Vec<String>) -> Self {
        MockRule {
            pattern: Regex::new(pattern).expect("invalid mock rule pattern"),
            responses,
        }
    }

    pub fn simple(pattern: &str, response: &str) -> Self {
        Self::new(pattern, vec![response.to_string()])
    }
}

/// What an unmatched prompt yields.
#[derive(Debug, Clone)]
pub enum MockPolicy {
    Strict,
    Default(String),
}

/// Script file shape: `{"policy": "strict" | {"default": "..."},
/// "rules": [{"pattern": "...", "responses": ["..."]}]}`.
#[derive(Debug, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    policy: Option<serde_json::Value>,
    rules: Vec<ScriptRule>,
}

#[derive(Debug, Deserialize)]
struct ScriptRule {
    pattern: String,
    responses: Vec<String>,
}

pub struct MockBackend {
    rules: Vec<MockRule>,
    counters: Mutex<Vec<usize>>,
    policy: MockPolicy,
}

impl MockBackend {
    pub fn new(rules: Vec<MockRule>, policy: MockPolicy) -> Self {
        let counters = Mutex::new(vec![0; rules.len()]);
        MockBackend {
            rules,
            counters,
            policy,
        }
    }

    /// Lenient mock answering every prompt with an empty completion.
    pub fn silent() -> Self {
        MockBackend::new(Vec::new(), MockPolicy::Default(String::new()))
    }

    pub fn from_script(json: &str) -> Result<Self> {
        let script: ScriptFile = serde_json::from_str(json)?;
        let policy = match script.policy {
            None => MockPolicy::Strict,
            Some(serde_json::Value::String(s)) if s == "strict" => MockPolicy::Strict,
            Some(serde_json::Value::Object(map)) => match map.get("default") {
                Some(serde_json::Value::String(d)) => MockPolicy::Default(d.clone()),
                _ => {
                    return Err(Error::InvalidConfig(
                        "mock script policy object must carry a string 'default'".to_string(),
                    ))
                }
            },
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unrecognized mock policy: {other}"
                )))
            }
        };
        let mut rules = Vec::with_capacity(script.rules.len());
        for r in script.rules {
            let pattern = Regex::new(&r.pattern)
                .map_err(|e| Error::InvalidConfig(format!("bad mock pattern: {e}")))?;
            rules.push(MockRule {
                pattern,
                responses: r.responses,
            });
        }
        Ok(MockBackend::new(rules, policy))
    }
}

fn expand_captures(template: &str, caps: &regex::Captures) -> String {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '$' {
            if let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                chars.next();
                if let Some(m) = caps.get(d as usize) {
                    out.push_str(m.as_str());
                }
                continue;
            }
        }
        out.push(c);
    }
    out
}

impl CompletionBackend for MockBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let mut counters = self.counters.lock().unwrap();
        for (i, rule) in self.rules.iter().enumerate() {
            if let Some(caps) = rule.pattern.captures(&req.prompt) {
                let idx = counters[i].min(rule.responses.len().saturating_sub(1));
                counters[i] += 1;
                let template = rule
                    .responses
                    .get(idx)
                    .map(String::as_str)
                    .unwrap_or_default();
                let text = expand_captures(template, &caps);
                return Ok(CompletionResponse {
                    tokens_in: approx_tokens(&req.prompt),
                    tokens_out: approx_tokens(&text),
                    text,
                    provider_id: "mock".to_string(),
                });
            }
        }
        match &self.policy {
            MockPolicy::Strict => Err(Error::UnscriptedPrompt {
                digest: digest64(&req.prompt),
            }),
            MockPolicy::Default(text) => Ok(CompletionResponse {
                tokens_in: approx_tokens(&req.prompt),
                tokens_out: approx_tokens(text),
                text: text.clone(),
                provider_id: "mock".to_string(),
            }),
        }
    }
}
