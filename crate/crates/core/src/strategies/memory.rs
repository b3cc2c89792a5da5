//! Memory module interface: append-only writes, bounded deterministic reads.

use crate::model::{MemoryStore, ModuleKind, ModuleSpec, StrategyKind};

use super::jaccard;

/// Append one observation unless the spec is the sentinel.
pub fn memory_write(spec: &ModuleSpec, store: &mut MemoryStore, observation: &str, step: usize) {
    assert_eq!(spec.kind, ModuleKind::Memory);
    if spec.strategy == StrategyKind::None {
        return;
    }
    store.append(observation, step, "observation");
}

/// Retrieve up to `retrieval_k` entry texts for the query.
pub fn memory_read(spec: &ModuleSpec, store: &MemoryStore, query: &str) -> Vec<String> {
    assert_eq!(spec.kind, ModuleKind::Memory);
    let k = spec.param("retrieval_k", 3).max(1) as usize;
    let entries = store.entries();
    match spec.strategy {
        StrategyKind::None => Vec::new(),
        StrategyKind::MemoryRecency => entries
            .iter()
            .rev()
            .take(k)
            .map(|e| e.text.clone())
            .collect(),
        StrategyKind::MemorySimilarity => {
            let mut scored: Vec<(f64, usize)> = entries
                .iter()
                .enumerate()
                .map(|(i, e)| (jaccard(query, &e.text), i))
                .collect();
            // Higher similarity first; ties go to the more recent entry.
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
            scored
                .into_iter()
                .take(k)
                .map(|(_, i)| entries[i].text.clone())
                .collect()
        }
        StrategyKind::MemoryScored => {
            let len = entries.len();
            let mut scored: Vec<(f64, usize)> = entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let recency = if len <= 1 { 1.0 } else { i as f64 / (len - 1) as f64 };
                    (jaccard(query, &e.text) + 0.1 * recency, i)
                })
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
            scored
                .into_iter()
                .take(k)
                .map(|(_, i)| entries[i].text.clone())
                .collect()
        }
        _ => Vec::new(),
    }
}
