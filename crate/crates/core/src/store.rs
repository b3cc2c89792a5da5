//! Durable append-only persistence for experience records and module pools.
//! One JSONL line per record; strict loading names the first corrupt line,
//! lenient loading skips corrupt lines.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ExperiencePool, ExperienceRecord, ModuleKind, ModulePools};

/// Append one record as a JSONL line, flushed before returning.
pub fn append_record(path: &Path, record: &ExperienceRecord) -> Result<()> {
    record.validate()?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|_| Error::StoreUnavailable(path.display().to_string()))?;
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|_| Error::StoreUnavailable(path.display().to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Strict,
    Lenient,
}

/// Load a pool from a JSONL store. An absent file is an empty pool.
pub fn load_pool(path: &Path, mode: LoadMode) -> Result<ExperiencePool> {
    if !path.exists() {
        return Ok(ExperiencePool::new());
    }
    let file =
        File::open(path).map_err(|_| Error::StoreUnavailable(path.display().to_string()))?;
    let mut pool = ExperiencePool::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::CorruptStore {
            line: i + 1,
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExperienceRecord>(&line) {
            Ok(record) => pool.append(record),
            Err(e) => {
                if mode == LoadMode::Strict {
                    return Err(Error::CorruptStore {
                        line: i + 1,
                        detail: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(pool)
}

/// Top k records by score descending; ties broken toward the later record.
pub fn top_k(pool: &ExperiencePool, k: usize) -> Vec<&ExperienceRecord> {
    let mut indexed: Vec<(usize, &ExperienceRecord)> = pool.records().iter().enumerate().collect();
    indexed.sort_by(|(ia, a), (ib, b)| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ib.cmp(ia))
    });
    indexed.into_iter().take(k).map(|(_, r)| r).collect()
}

/// Snapshot every module spec (seed and evolved) as a single JSON document.
pub fn write_pools_snapshot(path: &Path, pools: &ModulePools) -> Result<()> {
    let all: Vec<_> = ModuleKind::ALL
        .iter()
        .flat_map(|k| pools.members(*k))
        .collect();
    let text = serde_json::to_string_pretty(&all)?;
    std::fs::write(path, text).map_err(|_| Error::StoreUnavailable(path.display().to_string()))
}
