//! Command-line surface: run searches and baselines, evaluate single agents,
//! list module pools, verify replay digests, and render convergence reports.

mod report;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use modsearch_core::artifacts::write_run_artifacts;
use modsearch_core::baselines::{bayesian_search, random_search};
use modsearch_core::env::{landscape, make_task, WORKFLOW_TASK_IDS};
use modsearch_core::gateway::{
    digest64, CompletionBackend, Gateway, HttpBackend, MockBackend, ReplayBackend, ReplayMode,
};
use modsearch_core::search::{run_search, SearchParams, WorkflowEvaluator};
use modsearch_core::seed::{load_pools_dir, load_preset, preset, seed_pools};
use modsearch_core::workflow::{run_episode, trajectory_from_jsonl, trajectory_to_jsonl};
use modsearch_core::{
    AgentConfig, Error as CoreError, ExperiencePool, ModuleKind, ModulePools, PredictorId,
    TaskSpec,
};

/// Exit 0: success. Exit 1: runtime failure or replay drift. Exit 2: usage or
/// configuration error (clap uses 2 for flag errors as well).
#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_)
            | CoreError::UnknownTask(_)
            | CoreError::NoOperators
            | CoreError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "modsearch", version, about = "Search over modular agent designs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a module search and write result artifacts.
    Search(SearchArgs),
    /// Merge run trajectories into a CSV and an SVG convergence plot.
    Report(report::ReportArgs),
    /// Evaluate one agent on one task for one episode.
    Eval(EvalArgs),
    /// Inspect module pools.
    Pools(PoolsArgs),
    /// Verify a recorded trajectory against a replay cache.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LlmKind {
    Mock,
    Http,
    Replay,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PredictorArg {
    Llm,
    Knn,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SearcherArg {
    Modular,
    Random,
    Bayesian,
}

#[derive(Args)]
struct SearchArgs {
    /// TOML config file mirroring these flags; flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    stale_limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    llm: Option<LlmKind>,
    #[arg(long, value_enum)]
    predictor: Option<PredictorArg>,
    #[arg(long = "screen-k")]
    screen_k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    no_evolution: bool,
    #[arg(long, default_value_t = false)]
    no_recombination: bool,
    /// Searcher to run (default: the alternating-phase module search).
    #[arg(long, value_enum)]
    searcher: Option<SearcherArg>,
    /// Evaluation budget for the baseline searchers.
    #[arg(long)]
    budget: Option<usize>,
    /// Warm-start sample count for the surrogate baseline.
    #[arg(long)]
    init_samples: Option<usize>,
    /// Mock script JSON file (llm=mock).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Replay cache path (llm=replay reads it; llm=mock records into it).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Chat-completions endpoint (llm=http).
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name (llm=http).
    #[arg(long)]
    model: Option<String>,
}

/// File form of the search flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    task: Option<String>,
    episodes: Option<usize>,
    population: Option<usize>,
    stale_limit: Option<usize>,
    seed: Option<u64>,
    llm: Option<LlmKind>,
    predictor: Option<PredictorArg>,
    screen_k: Option<usize>,
    out: Option<PathBuf>,
    no_evolution: Option<bool>,
    no_recombination: Option<bool>,
    searcher: Option<SearcherArg>,
    budget: Option<usize>,
    init_samples: Option<usize>,
    script: Option<PathBuf>,
    cache: Option<PathBuf>,
    endpoint: Option<String>,
    model: Option<String>,
}

#[derive(Clone)]
struct BackendCfg {
    llm: LlmKind,
    script: Option<PathBuf>,
    cache: Option<PathBuf>,
    endpoint: Option<String>,
    model: Option<String>,
}

fn build_backend(cfg: &BackendCfg) -> CliResult<Box<dyn CompletionBackend>> {
    match cfg.llm {
        LlmKind::Mock => {
            let mock: Box<dyn CompletionBackend> = match &cfg.script {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Usage(format!("cannot read script {}: {e}", path.display()))
                    })?;
                    Box::new(MockBackend::from_script(&text)?)
                }
                None => Box::new(MockBackend::silent()),
            };
            match &cfg.cache {
                Some(cache) => Ok(Box::new(ReplayBackend::open(
                    Some(mock),
                    cache,
                    ReplayMode::Record,
                )?)),
                None => Ok(mock),
            }
        }
        LlmKind::Replay => {
            let cache = cfg.cache.as_ref().ok_or_else(|| {
                CliError::Usage("--llm replay requires --cache".to_string())
            })?;
            Ok(Box::new(ReplayBackend::open(
                None,
                cache,
                ReplayMode::ReplayOnly,
            )?))
        }
        LlmKind::Http => {
            let endpoint = cfg.endpoint.as_ref().ok_or_else(|| {
                CliError::Usage("--llm http requires --endpoint".to_string())
            })?;
            let model = cfg.model.as_ref().ok_or_else(|| {
                CliError::Usage("--llm http requires --model".to_string())
            })?;
            Ok(Box::new(HttpBackend::new(endpoint.clone(), model.clone())))
        }
    }
}

/// Built-in synthetic landscape tasks keyed by id.
fn landscape_sizes(id: &str) -> Option<[usize; 4]> {
    match id {
        "landscape-small" => Some([4, 5, 3, 4]),
        "landscape-medium" => Some([5, 7, 5, 6]),
        _ => None,
    }
}

/// The landscape structure is fixed per task id; the search seed only drives
/// the searcher, so every run explores the same landscape.
const LANDSCAPE_GEN_SEED: u64 = 42;

fn landscape_task_spec(id: &str) -> TaskSpec {
    TaskSpec {
        id: id.to_string(),
        description: format!("maximize the synthetic score landscape '{id}'"),
        tools: vec![],
        max_trials: 1,
        max_steps_per_trial: 1,
    }
}

fn cmd_search(args: SearchArgs) -> CliResult<()> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config file: {e}")))?
        }
        None => FileConfig::default(),
    };

    let task_id = args
        .task
        .or(file.task)
        .ok_or_else(|| CliError::Usage("missing --task".to_string()))?;
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::Usage("missing --out".to_string()))?;
    let searcher = args
        .searcher
        .or(file.searcher)
        .unwrap_or(SearcherArg::Modular);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let backend_cfg = BackendCfg {
        llm: args.llm.or(file.llm).unwrap_or(LlmKind::Mock),
        script: args.script.or(file.script),
        cache: args.cache.or(file.cache),
        endpoint: args.endpoint.or(file.endpoint),
        model: args.model.or(file.model),
    };
    build_backend(&backend_cfg)?; // validate backend wiring up front

    let defaults = SearchParams::default();
    let params = SearchParams {
        max_episodes: args.episodes.or(file.episodes).unwrap_or(defaults.max_episodes),
        population: args.population.or(file.population).unwrap_or(defaults.population),
        stale_limit: args
            .stale_limit
            .or(file.stale_limit)
            .unwrap_or(defaults.stale_limit),
        predictor: match args.predictor.or(file.predictor) {
            Some(PredictorArg::Llm) => PredictorId::Llm,
            Some(PredictorArg::Knn) | None => PredictorId::Knn,
        },
        screen_k: args.screen_k.or(file.screen_k).unwrap_or(defaults.screen_k),
        disable_evolution: args.no_evolution || file.no_evolution.unwrap_or(false),
        disable_recombination: args.no_recombination || file.no_recombination.unwrap_or(false),
        seed,
        initial: None,
    };
    params.validate()?;

    let is_landscape = landscape_sizes(&task_id).is_some();
    if !is_landscape && !WORKFLOW_TASK_IDS.contains(&task_id.as_str()) {
        return Err(CoreError::UnknownTask(task_id).into());
    }

    let mut pools = if let Some(sizes) = landscape_sizes(&task_id) {
        landscape::synthetic_pools(sizes)
    } else {
        seed_pools()
    };
    let mut experience = ExperiencePool::new();
    let gw = Gateway::new(build_backend(&backend_cfg)?);

    let budget = args.budget.or(file.budget).unwrap_or(60);
    let init_samples = args.init_samples.or(file.init_samples).unwrap_or(10);

    let run = |evaluator: &dyn modsearch_core::search::Evaluator,
               pools: &mut ModulePools,
               experience: &mut ExperiencePool|
     -> CliResult<modsearch_core::SearchResult> {
        match searcher {
            SearcherArg::Modular => {
                let task = if is_landscape {
                    landscape_task_spec(&task_id)
                } else {
                    make_task(&task_id, seed)?.task
                };
                Ok(run_search(&params, &task, evaluator, pools, experience, &gw)?)
            }
            SearcherArg::Random => {
                Ok(random_search(budget, evaluator, pools, experience, seed)?)
            }
            SearcherArg::Bayesian => Ok(bayesian_search(
                budget,
                init_samples,
                0.3,
                evaluator,
                pools,
                experience,
                seed,
            )?),
        }
    };

    let result = if let Some(sizes) = landscape_sizes(&task_id) {
        let ls = landscape::OracleLandscape::generate(
            sizes,
            LANDSCAPE_GEN_SEED,
            0.02,
            0.08,
            0.05,
            0.06,
        );
        let evaluator = landscape::LandscapeEvaluator::new(ls, task_id.clone());
        run(&evaluator, &mut pools, &mut experience)?
    } else {
        let eval_backend_cfg = backend_cfg.clone();
        let evaluator = WorkflowEvaluator {
            task_id: task_id.clone(),
            seed,
            gateway_factory: move || {
                Gateway::new(
                    build_backend(&eval_backend_cfg)
                        .expect("backend validated at startup"),
                )
            },
        };
        run(&evaluator, &mut pools, &mut experience)?
    };

    write_run_artifacts(&out, &result, experience.records(), &pools)?;
    println!(
        "searcher={} task={} best_score={} best={} real_evals={} out={}",
        result.searcher,
        result.task_id,
        result.best_score,
        result.best,
        result.real_evals,
        out.display()
    );
    Ok(())
}

#[derive(Args)]
struct EvalArgs {
    /// Preset name (e.g. alfworld-best), preset file path, or agent JSON file.
    #[arg(long)]
    agent: String,
    #[arg(long)]
    task: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = LlmKind::Mock)]
    llm: LlmKind,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Write the episode trajectory as JSONL.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
}

fn resolve_agent(spec: &str) -> CliResult<AgentConfig> {
    let direct = Path::new(spec);
    let with_ext = PathBuf::from(format!("{spec}.json"));
    let path = if direct.is_file() {
        Some(direct.to_path_buf())
    } else if with_ext.is_file() {
        Some(with_ext)
    } else {
        None
    };
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read agent {}: {e}", path.display())))?;
        return Ok(load_preset(&text)?);
    }
    let name = Path::new(spec)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(spec);
    Ok(preset(name)?)
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let agent = resolve_agent(&args.agent)?;
    let inst = make_task(&args.task, args.seed)?;
    let mut env = inst.env;
    let pools = seed_pools();
    let backend = build_backend(&BackendCfg {
        llm: args.llm,
        script: args.script,
        cache: args.cache,
        endpoint: args.endpoint,
        model: args.model,
    })?;
    let gw = Gateway::new(backend);
    let traj = run_episode(&agent, &pools, &inst.task, env.as_mut(), &inst.registry, &gw)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let (tin, tout) = gw.total_tokens();
    if let Some(out) = args.trajectory_out {
        std::fs::write(&out, trajectory_to_jsonl(&traj))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    }
    println!("score {} tokens {}", traj.final_score, tin + tout);
    Ok(())
}

#[derive(Args)]
struct PoolsArgs {
    #[command(subcommand)]
    action: PoolsAction,
}

#[derive(Subcommand)]
enum PoolsAction {
    /// Print every module spec as "name  kind  origin".
    List {
        /// Load specs from a directory of JSON files instead of the
        /// built-in seed catalog.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn cmd_pools(args: PoolsArgs) -> CliResult<()> {
    let PoolsAction::List { dir } = args.action;
    let pools = match dir {
        Some(dir) => load_pools_dir(&dir)?,
        None => seed_pools(),
    };
    for kind in ModuleKind::ALL {
        for spec in pools.members(kind) {
            println!("{}\t{}\t{:?}", spec.name, kind.label(), spec.origin);
        }
    }
    Ok(())
}

#[derive(Args)]
struct ReplayArgs {
    /// Trajectory JSONL produced by `eval --trajectory-out`.
    #[arg(long)]
    trajectory: PathBuf,
    /// Replay cache the episode was recorded into.
    #[arg(long)]
    cache: PathBuf,
}

#[derive(Deserialize)]
struct CacheDigestLine {
    prompt: String,
    text: String,
}

fn cmd_replay(args: ReplayArgs) -> CliResult<()> {
    let traj_text = std::fs::read_to_string(&args.trajectory).map_err(|e| {
        CliError::Usage(format!("cannot read {}: {e}", args.trajectory.display()))
    })?;
    let traj = trajectory_from_jsonl(&traj_text)?;
    let cache_text = std::fs::read_to_string(&args.cache)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.cache.display())))?;

    let mut prompts: HashSet<String> = HashSet::new();
    let mut completions: HashSet<String> = HashSet::new();
    for (i, line) in cache_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CacheDigestLine = serde_json::from_str(line).map_err(|e| {
            CliError::Runtime(format!("cache corruption at line {}: {e}", i + 1))
        })?;
        prompts.insert(digest64(&parsed.prompt));
        completions.insert(digest64(&parsed.text));
    }

    for (i, step) in traj.steps.iter().enumerate() {
        if step.prompt_digest.is_empty() {
            continue; // local phase, no provider call
        }
        if !prompts.contains(&step.prompt_digest)
            || !completions.contains(&step.completion_digest)
        {
            return Err(CliError::Runtime(format!("trajectory drift at step {}", i + 1)));
        }
    }
    println!(
        "replay ok: {} steps verified, final score {}",
        traj.steps.len(),
        traj.final_score
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Search(args) => cmd_search(args),
        Cmd::Report(args) => report::cmd_report(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Pools(args) => cmd_pools(args),
        Cmd::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
