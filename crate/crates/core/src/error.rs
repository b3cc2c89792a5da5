use thiserror::Error;

/// Errors surfaced by the search library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty design dimension: {0:?}")]
    EmptyPool(crate::model::ModuleKind),

    #[error("unknown module '{name}' in {slot} slot")]
    UnknownModule { slot: &'static str, name: String },

    #[error("plan parse failure: {raw:?}")]
    PlanParseFailure { raw: String },

    #[error("reasoning provider failure: {0}")]
    ReasoningProviderFailure(String),

    #[error("tool hallucination: provider named '{named}' which is not in the tool pool")]
    ToolHallucination { named: String },

    #[error("tool pool is empty")]
    EmptyToolPool,

    #[error("unregistered tool implementation '{0}'")]
    UnregisteredTool(String),

    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("unscripted prompt (digest {digest})")]
    UnscriptedPrompt { digest: String },

    #[error("cache corruption at line {line}: {detail}")]
    CacheCorruption { line: usize, detail: String },

    #[error("replay miss: request not in cache (digest {digest})")]
    ReplayMiss { digest: String },

    #[error("episode finished; no further steps accepted")]
    EpisodeFinished,

    #[error("landscape too large for exhaustive oracle ({0} combinations)")]
    LandscapeTooLarge(u64),

    #[error("no operators enabled: evolution and recombination both disabled")]
    NoOperators,

    #[error("pools admit fewer than {need} distinct non-parent combinations")]
    InsufficientPool { need: usize },

    #[error("store unavailable: {0}")]
    StoreUnavailable(String),

    #[error("corrupt experience store: line {line}: {detail}")]
    CorruptStore { line: usize, detail: String },

    #[error("invalid module spec: {0}")]
    InvalidSpec(String),

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown task id '{0}'")]
    UnknownTask(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
