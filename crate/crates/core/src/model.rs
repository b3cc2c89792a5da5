//! Domain types for the modular agent design space.
//!
//! An agent is a combination of four modules (planning, reasoning, tool use,
//! memory) drawn from standardized pools. The Cartesian product of the pools
//! is the search space; an append-only experience pool records every real
//! evaluation performed anywhere in the system.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel module name standing for an absent optional slot.
pub const SENTINEL: &str = "none";

/// Maximum number of subtasks a plan may carry.
pub const MAX_SUBTASKS: usize = 16;

/// The four module categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Planning,
    Reasoning,
    #[serde(rename = "tooluse")]
    ToolUse,
    Memory,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 4] = [
        ModuleKind::Planning,
        ModuleKind::Reasoning,
        ModuleKind::ToolUse,
        ModuleKind::Memory,
    ];

    pub fn index(self) -> usize {
        match self {
            ModuleKind::Planning => 0,
            ModuleKind::Reasoning => 1,
            ModuleKind::ToolUse => 2,
            ModuleKind::Memory => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModuleKind::Planning => "planning",
            ModuleKind::Reasoning => "reasoning",
            ModuleKind::ToolUse => "tooluse",
            ModuleKind::Memory => "memory",
        }
    }

    /// Placeholders legal in a prompt template of this kind.
    pub fn legal_placeholders(self) -> &'static [&'static str] {
        match self {
            ModuleKind::Planning => &["task", "feedback"],
            ModuleKind::Reasoning => &["subtask", "feedback", "memory", "tool_result"],
            ModuleKind::ToolUse => &["problem", "tool_catalog"],
            ModuleKind::Memory => &["observation", "query"],
        }
    }
}

/// Interpretable strategy implemented by a module spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    SingleShot,
    SampleAndVote,
    TreeSearch,
    SelfRefine,
    StepBack,
    PlanList,
    PlanWithFeedback,
    ToolMatch,
    ToolBruteRank,
    MemoryRecency,
    MemorySimilarity,
    MemoryScored,
    None,
}

impl StrategyKind {
    /// Kinds this strategy may legally appear under.
    pub fn legal_for(self, kind: ModuleKind) -> bool {
        use ModuleKind::*;
        use StrategyKind::*;
        match self {
            SingleShot | SampleAndVote | TreeSearch | SelfRefine | StepBack => kind == Reasoning,
            PlanList | PlanWithFeedback => kind == Planning,
            ToolMatch | ToolBruteRank => kind == ToolUse,
            MemoryRecency | MemorySimilarity | MemoryScored => kind == Memory,
            None => kind != Reasoning,
        }
    }
}

/// Declared bounds for a numeric knob, or `None` if the name is unknown.
pub fn param_bounds(name: &str) -> Option<(i64, i64)> {
    match name {
        "sample_count" => Some((1, 9)),
        "tree_breadth" => Some((1, 4)),
        "tree_depth" => Some((1, 3)),
        "refine_rounds" => Some((0, 3)),
        "retrieval_k" => Some((1, 8)),
        _ => None,
    }
}

/// Where a spec came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Evolved,
}

/// A validated prompt-strategy document: the portable unit the pools store
/// and evolution emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub name: String,
    pub kind: ModuleKind,
    pub strategy: StrategyKind,
    #[serde(default)]
    pub params: BTreeMap<String, i64>,
    #[serde(default)]
    pub prompt_template: String,
    #[serde(default)]
    pub description: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_name: Option<String>,
}

impl ModuleSpec {
    pub fn is_sentinel(&self) -> bool {
        self.name == SENTINEL
    }

    /// Knob value with its documented default when absent.
    pub fn param(&self, name: &str, default: i64) -> i64 {
        self.params.get(name).copied().unwrap_or(default)
    }
}

/// One point in the design space: a (P, R, T, M) combination of pool members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentConfig {
    pub planning: String,
    pub reasoning: String,
    pub tooluse: String,
    pub memory: String,
}

impl AgentConfig {
    pub fn new(
        planning: impl Into<String>,
        reasoning: impl Into<String>,
        tooluse: impl Into<String>,
        memory: impl Into<String>,
    ) -> Self {
        AgentConfig {
            planning: planning.into(),
            reasoning: reasoning.into(),
            tooluse: tooluse.into(),
            memory: memory.into(),
        }
    }

    pub fn slot(&self, kind: ModuleKind) -> &str {
        match kind {
            ModuleKind::Planning => &self.planning,
            ModuleKind::Reasoning => &self.reasoning,
            ModuleKind::ToolUse => &self.tooluse,
            ModuleKind::Memory => &self.memory,
        }
    }

    pub fn set_slot(&mut self, kind: ModuleKind, name: impl Into<String>) {
        let name = name.into();
        match kind {
            ModuleKind::Planning => self.planning = name,
            ModuleKind::Reasoning => self.reasoning = name,
            ModuleKind::ToolUse => self.tooluse = name,
            ModuleKind::Memory => self.memory = name,
        }
    }

    /// Number of slots where the two configs differ (0..=4).
    pub fn hamming(&self, other: &AgentConfig) -> usize {
        ModuleKind::ALL
            .iter()
            .filter(|k| self.slot(**k) != other.slot(**k))
            .count()
    }
}

impl std::fmt::Display for AgentConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(P={}, R={}, T={}, M={})",
            self.planning, self.reasoning, self.tooluse, self.memory
        )
    }
}

/// The four standardized pools whose Cartesian product is the search space.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModulePools {
    pools: [Vec<ModuleSpec>; 4],
}

impl ModulePools {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self, kind: ModuleKind) -> &[ModuleSpec] {
        &self.pools[kind.index()]
    }

    pub fn find(&self, kind: ModuleKind, name: &str) -> Option<&ModuleSpec> {
        self.pools[kind.index()].iter().find(|s| s.name == name)
    }

    pub fn position(&self, kind: ModuleKind, name: &str) -> Option<usize> {
        self.pools[kind.index()].iter().position(|s| s.name == name)
    }

    pub fn sizes(&self) -> [usize; 4] {
        [
            self.pools[0].len(),
            self.pools[1].len(),
            self.pools[2].len(),
            self.pools[3].len(),
        ]
    }

    /// Insert a spec after validating every invariant against this pool.
    pub fn insert(&mut self, spec: ModuleSpec) -> Result<()> {
        let report = validate_module_spec(&spec, self);
        if !report.is_ok() {
            return Err(Error::InvalidSpec(report.violations.join("; ")));
        }
        self.pools[spec.kind.index()].push(spec);
        Ok(())
    }

    /// Insert without name-uniqueness enforcement bypasses are not offered;
    /// tests construct pools through `insert` only.
    pub fn resolve(&self, agent: &AgentConfig) -> Result<[&ModuleSpec; 4]> {
        let lookup = |kind: ModuleKind, slot: &'static str, name: &str| {
            self.find(kind, name).ok_or_else(|| Error::UnknownModule {
                slot,
                name: name.to_string(),
            })
        };
        Ok([
            lookup(ModuleKind::Planning, "planning", &agent.planning)?,
            lookup(ModuleKind::Reasoning, "reasoning", &agent.reasoning)?,
            lookup(ModuleKind::ToolUse, "tooluse", &agent.tooluse)?,
            lookup(ModuleKind::Memory, "memory", &agent.memory)?,
        ])
    }

    /// Validate an agent config against these pools: all four names resolve
    /// and the reasoning slot is never the sentinel.
    pub fn validate_config(&self, agent: &AgentConfig) -> Result<()> {
        if agent.reasoning == SENTINEL {
            return Err(Error::UnknownModule {
                slot: "reasoning",
                name: SENTINEL.to_string(),
            });
        }
        self.resolve(agent).map(|_| ())
    }
}

/// Product of the four pool sizes, recomputed from the lists each call.
pub fn combination_count(pools: &ModulePools) -> Result<u64> {
    let mut product: u64 = 1;
    for kind in ModuleKind::ALL {
        let len = pools.members(kind).len() as u64;
        if len == 0 {
            return Err(Error::EmptyPool(kind));
        }
        product *= len;
    }
    Ok(product)
}

/// Validation outcome for a candidate module spec. Violations are data,
/// not failures.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every `ModuleSpec` invariant plus name uniqueness within the pool
/// the spec would join.
pub fn validate_module_spec(spec: &ModuleSpec, pools: &ModulePools) -> ValidationReport {
    let mut v = Vec::new();
    if spec.name.trim().is_empty() {
        v.push("empty name".to_string());
    }
    if pools.find(spec.kind, &spec.name).is_some() {
        v.push(format!("duplicate name '{}'", spec.name));
    }
    if !spec.strategy.legal_for(spec.kind) {
        v.push(format!(
            "strategy {:?} is illegal for kind {:?}",
            spec.strategy, spec.kind
        ));
    }
    if spec.is_sentinel() != (spec.strategy == StrategyKind::None) {
        v.push("sentinel name and none strategy must coincide".to_string());
    }
    for ph in crate::template::placeholders(&spec.prompt_template) {
        if !spec.kind.legal_placeholders().contains(&ph.as_str()) {
            v.push(format!("illegal placeholder for kind: {{{ph}}}"));
        }
    }
    for (name, value) in &spec.params {
        match param_bounds(name) {
            Some((lo, hi)) => {
                if *value < lo || *value > hi {
                    v.push(format!("param {name}={value} outside [{lo}, {hi}]"));
                }
            }
            None => v.push(format!("unknown param name '{name}'")),
        }
    }
    if spec.description.chars().count() > 600 {
        v.push("description exceeds 600 characters".to_string());
    }
    match (&spec.origin, &spec.parent_name) {
        (Origin::Evolved, Some(parent)) => {
            if pools.find(spec.kind, parent).is_none() {
                v.push(format!("parent '{parent}' not found in {:?} pool", spec.kind));
            }
        }
        (Origin::Evolved, None) => v.push("evolved spec without parent_name".to_string()),
        (Origin::Seed, _) => {}
    }
    ValidationReport { violations: v }
}

/// A registered deterministic tool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolDef {
    pub name: String,
    pub signature: String,
    pub docstring: String,
    pub impl_id: String,
}

/// One task an agent can be evaluated on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub tools: Vec<ToolDef>,
    pub max_trials: usize,
    pub max_steps_per_trial: usize,
}

/// Ordered subtask decomposition produced by a planning module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTaskPlan {
    subtasks: Vec<String>,
}

impl SubTaskPlan {
    /// Build a plan, enforcing 1..=16 nonempty subtasks (excess truncated).
    pub fn new(subtasks: Vec<String>) -> Result<Self> {
        let mut subtasks: Vec<String> = subtasks
            .into_iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if subtasks.is_empty() {
            return Err(Error::PlanParseFailure {
                raw: "<empty plan>".to_string(),
            });
        }
        subtasks.truncate(MAX_SUBTASKS);
        Ok(SubTaskPlan { subtasks })
    }

    pub fn subtasks(&self) -> &[String] {
        &self.subtasks
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one subtask
    }
}

/// One stored memory entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub text: String,
    pub step_index: usize,
    pub tag: String,
}

/// Append-only memory database; step indices are nondecreasing.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    entries: Vec<MemoryEntry>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, text: impl Into<String>, step_index: usize, tag: impl Into<String>) {
        debug_assert!(self
            .entries
            .last()
            .map_or(true, |e| e.step_index <= step_index));
        self.entries.push(MemoryEntry {
            text: text.into(),
            step_index,
            tag: tag.into(),
        });
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Which part of the system produced an experience record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Init,
    Evolution,
    Recombination,
    Baseline,
}

/// One evaluated (P, R, T, M, v) tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRecord {
    #[serde(flatten)]
    pub agent: AgentConfig,
    pub score: f64,
    pub token_cost: u64,
    pub task_id: String,
    pub episode: usize,
    pub source: RecordSource,
}

impl ExperienceRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidSpec(format!(
                "score {} outside [0, 1]",
                self.score
            )));
        }
        Ok(())
    }
}

/// Append-only log of every real evaluation.
#[derive(Debug, Clone, Default)]
pub struct ExperiencePool {
    records: Vec<ExperienceRecord>,
}

impl ExperiencePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: ExperienceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[ExperienceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Execution phase of one trajectory step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Plan,
    Reason,
    Tool,
    MemoryRead,
    MemoryWrite,
    EnvAct,
}

/// One logged step of an episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub phase: Phase,
    pub prompt_digest: String,
    pub completion_digest: String,
    pub action_text: String,
    pub feedback_text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// Per-episode execution log enabling replay checks and cost reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub agent: AgentConfig,
    pub steps: Vec<TrajectoryStep>,
    pub final_score: f64,
}

impl Trajectory {
    pub fn tokens_in(&self) -> u64 {
        self.steps.iter().map(|s| s.tokens_in).sum()
    }

    pub fn tokens_out(&self) -> u64 {
        self.steps.iter().map(|s| s.tokens_out).sum()
    }
}

/// Which surrogate produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorId {
    Llm,
    Knn,
}

/// Surrogate estimate of an agent's score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedScore {
    pub value: f64,
    pub rationale: String,
    pub predictor_id: PredictorId,
}
