//! Seed catalog: the interpretable strategy specs that populate the initial
//! pools, shipped as one JSON document per spec under `modules/seed/` and
//! embedded here so the library works from any working directory.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{AgentConfig, ModulePools, ModuleSpec};

macro_rules! seed_docs {
    ($($file:literal),+ $(,)?) => {
        &[$(($file, include_str!(concat!("../../../modules/seed/", $file)))),+]
    };
}

/// Embedded seed documents, in pool insertion order.
pub const SEED_DOCS: &[(&str, &str)] = seed_docs![
    "planning--none.json",
    "planning--io.json",
    "planning--deps.json",
    "planning--voyager.json",
    "planning--td.json",
    "planning--ir.json",
    "reasoning--cot.json",
    "reasoning--cot-sc.json",
    "reasoning--tot.json",
    "reasoning--self-refine.json",
    "reasoning--step-back.json",
    "reasoning--sf-tot.json",
    "reasoning--casrc.json",
    "reasoning--htss.json",
    "tooluse--none.json",
    "tooluse--toolbench.json",
    "tooluse--toolbf.json",
    "tooluse--th.json",
    "memory--none.json",
    "memory--dilu.json",
    "memory--generative_agents.json",
    "memory--hier.json",
    "memory--reflexion.json",
    "memory--tp.json",
];

/// Build the standard pools from the embedded seed catalog.
pub fn seed_pools() -> ModulePools {
    let mut pools = ModulePools::new();
    for (file, doc) in SEED_DOCS {
        let spec: ModuleSpec = serde_json::from_str(doc)
            .unwrap_or_else(|e| panic!("embedded seed doc {file} is invalid: {e}"));
        pools
            .insert(spec)
            .unwrap_or_else(|e| panic!("embedded seed doc {file} rejected: {e}"));
    }
    pools
}

/// Load a pool set from a directory of spec documents (sorted by file name).
pub fn load_pools_dir(dir: impl AsRef<Path>) -> Result<ModulePools> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut pools = ModulePools::new();
    for path in files {
        let text = std::fs::read_to_string(&path)?;
        let spec: ModuleSpec = serde_json::from_str(&text)?;
        pools.insert(spec)?;
    }
    Ok(pools)
}

#[derive(Deserialize)]
struct PresetDoc {
    planning: String,
    reasoning: String,
    tooluse: String,
    memory: String,
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
}

/// Parse a preset agent document (an `AgentConfig` with an optional note).
pub fn load_preset(json: &str) -> Result<AgentConfig> {
    let doc: PresetDoc = serde_json::from_str(json)?;
    Ok(AgentConfig {
        planning: doc.planning,
        reasoning: doc.reasoning,
        tooluse: doc.tooluse,
        memory: doc.memory,
    })
}

macro_rules! preset_docs {
    ($($file:literal),+ $(,)?) => {
        &[$(($file, include_str!(concat!("../../../presets/", $file, ".json")))),+]
    };
}

/// Embedded preset agent configurations.
pub const PRESET_DOCS: &[(&str, &str)] = preset_docs![
    "webshop-best",
    "alfworld-best",
    "sciworld-best",
    "m3tool-best",
    "travelplanner-best",
    "pddl-best",
];

/// Look up an embedded preset by name.
pub fn preset(name: &str) -> Result<AgentConfig> {
    PRESET_DOCS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, doc)| load_preset(doc))
        .transpose()?
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{name}'")))
}
