//! Modular agent design space and search: four module pools (planning,
//! reasoning, tool use, memory) with a standardized IO contract, a workflow
//! engine that runs assembled agents against small deterministic
//! environments, and searchers that look for strong module combinations
//! under a fixed evaluation budget.

pub mod artifacts;
pub mod baselines;
pub mod env;
pub mod error;
pub mod gateway;
pub mod model;
pub mod search;
pub mod seed;
pub mod store;
pub mod strategies;
pub mod template;
pub mod workflow;

pub use error::{Error, Result};
pub use model::{
    AgentConfig, ExperiencePool, ExperienceRecord, ModuleKind, ModulePools, ModuleSpec, Origin,
    PredictedScore, PredictorId, RecordSource, StrategyKind, TaskSpec, Trajectory,
};
pub use search::{run_search, Evaluator, SearchParams, SearchResult};
