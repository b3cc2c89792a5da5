//! Record/replay cache wrapper. Cache file is JSONL of
//! `{key, prompt, temperature, max_tokens, seed, text, tokens_in, tokens_out}`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CompletionBackend, CompletionRequest, CompletionResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Miss → call the inner backend and append to the cache.
    Record,
    /// Miss → error.
    ReplayOnly,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    prompt: String,
    temperature: f64,
    max_tokens: u32,
    #[serde(default)]
    seed: Option<u64>,
    text: String,
    tokens_in: u64,
    tokens_out: u64,
}

pub struct ReplayBackend {
    inner: Option<Box<dyn CompletionBackend>>,
    path: PathBuf,
    entries: Mutex<HashMap<String, CompletionResponse>>,
    file: Mutex<File>,
}

impl ReplayBackend {
    pub fn open(
        inner: Option<Box<dyn CompletionBackend>>,
        path: impl AsRef<Path>,
        mode: ReplayMode,
    ) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine =
                    serde_json::from_str(&line).map_err(|e| Error::CacheCorruption {
                        line: i + 1,
                        detail: e.to_string(),
                    })?;
                entries.insert(
                    parsed.key.clone(),
                    CompletionResponse {
                        text: parsed.text,
                        tokens_in: parsed.tokens_in,
                        tokens_out: parsed.tokens_out,
                        provider_id: "replay".to_string(),
                    },
                );
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let inner = match mode {
            ReplayMode::Record => inner,
            ReplayMode::ReplayOnly => None,
        };
        Ok(ReplayBackend {
            inner,
            path,
            entries: Mutex::new(entries),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse> {
        let key = req.cache_key();
        if let Some(hit) = self.entries.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let inner = self.inner.as_ref().ok_or_else(|| Error::ReplayMiss {
            digest: key.clone(),
        })?;
        let resp = inner.complete(req)?;
        let line = serde_json::to_string(&CacheLine {
            key: key.clone(),
            prompt: req.prompt.clone(),
            temperature: req.temperature,
            max_tokens: req.max_tokens,
            seed: req.seed,
            text: resp.text.clone(),
            tokens_in: resp.tokens_in,
            tokens_out: resp.tokens_out,
        })?;
        {
            let mut file = self.file.lock().unwrap();
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        self.entries.lock().unwrap().insert(key, resp.clone());
        Ok(resp)
    }
}
