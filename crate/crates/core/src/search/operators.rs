//! The two search operators: recombination (new combinations of existing pool
//! members) and evolution (new module specs used as single-slot mutants).
//! Both keep their output size fixed at N by back-filling with seeded valid
//! fallbacks when the provider's proposals do not survive validation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, Gateway};
use crate::model::{
    validate_module_spec, AgentConfig, ExperiencePool, ModuleKind, ModulePools, ModuleSpec,
    Origin, StrategyKind, TaskSpec, SENTINEL,
};
use crate::template::render;

use super::predictor::experience_lines;

const RECOMBINATION_TEMPLATE: &str = include_str!("../../../../templates/recombination.txt");
const EVOLUTION_TEMPLATE: &str = include_str!("../../../../templates/evolution.txt");

/// Experience records shown to the operators, best-first.
const OPERATOR_CONTEXT_K: usize = 20;

#[derive(Debug, Clone)]
pub struct RecombineOutcome {
    pub configs: Vec<AgentConfig>,
    pub fallback_count: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub new_specs: Vec<ModuleSpec>,
    pub children: Vec<AgentConfig>,
    pub fallback_count: usize,
}

fn pool_listing(pools: &ModulePools) -> String {
    let mut out = String::new();
    for kind in ModuleKind::ALL {
        out.push_str(kind.label());
        out.push_str(": ");
        let names: Vec<&str> = pools.members(kind).iter().map(|s| s.name.as_str()).collect();
        out.push_str(&names.join(", "));
        out.push('\n');
    }
    out
}

/// Count of valid combinations: reasoning must not be the sentinel.
pub fn valid_combination_count(pools: &ModulePools) -> u64 {
    let real_reasoning = pools
        .members(ModuleKind::Reasoning)
        .iter()
        .filter(|s| !s.is_sentinel())
        .count() as u64;
    pools.members(ModuleKind::Planning).len() as u64
        * real_reasoning
        * pools.members(ModuleKind::ToolUse).len() as u64
        * pools.members(ModuleKind::Memory).len() as u64
}

/// Uniform random valid config (reasoning never the sentinel).
pub fn random_valid_config<R: Rng>(pools: &ModulePools, rng: &mut R) -> AgentConfig {
    let pick = |kind: ModuleKind, rng: &mut R| -> String {
        let members = pools.members(kind);
        let real: Vec<&ModuleSpec> = if kind == ModuleKind::Reasoning {
            members.iter().filter(|s| !s.is_sentinel()).collect()
        } else {
            members.iter().collect()
        };
        real[rng.gen_range(0..real.len())].name.clone()
    };
    AgentConfig {
        planning: pick(ModuleKind::Planning, rng),
        reasoning: pick(ModuleKind::Reasoning, rng),
        tooluse: pick(ModuleKind::ToolUse, rng),
        memory: pick(ModuleKind::Memory, rng),
    }
}

/// First fenced code block's body, or the whole text when unfenced.
fn fenced_body(text: &str) -> &str {
    let re = regex::Regex::new(r"(?s)```[a-zA-Z]*\n?(.*?)```").unwrap();
    match re.captures(text) {
        Some(c) => c.get(1).unwrap().as_str(),
        None => text,
    }
}

fn parse_configs(text: &str) -> Vec<AgentConfig> {
    serde_json::from_str::<Vec<AgentConfig>>(fenced_body(text).trim()).unwrap_or_default()
}

/// Propose N new combinations of existing pool members (one re-ask, then
/// seeded random back-fill).
pub fn recombine<R: Rng>(
    parent: &AgentConfig,
    task: &TaskSpec,
    n: usize,
    pools: &ModulePools,
    experience: &ExperiencePool,
    llm: &Gateway,
    rng: &mut R,
) -> Result<RecombineOutcome> {
    pools.validate_config(parent)?;
    if valid_combination_count(pools).saturating_sub(1) < n as u64 {
        return Err(Error::InsufficientPool { need: n });
    }
    let prompt = render(
        RECOMBINATION_TEMPLATE,
        &[
            ("task", &task.description),
            ("pools", &pool_listing(pools)),
            ("experience", &experience_lines(experience, OPERATOR_CONTEXT_K)),
            ("parent", &parent.to_string()),
            ("count", &n.to_string()),
        ],
    );

    let mut accepted: Vec<AgentConfig> = Vec::new();
    for _ in 0..2 {
        let resp = llm.complete(&CompletionRequest::new(prompt.clone()))?;
        for proposal in parse_configs(&resp.text) {
            if accepted.len() == n {
                break;
            }
            let valid = pools.validate_config(&proposal).is_ok()
                && proposal != *parent
                && !accepted.contains(&proposal);
            if valid {
                accepted.push(proposal);
            }
        }
        if accepted.len() == n {
            break;
        }
    }

    let fallback_count = n - accepted.len();
    while accepted.len() < n {
        let candidate = random_valid_config(pools, rng);
        if candidate != *parent && !accepted.contains(&candidate) {
            accepted.push(candidate);
        }
    }
    Ok(RecombineOutcome {
        configs: accepted,
        fallback_count,
    })
}

/// Loosely-typed module document as emitted by a provider.
#[derive(Debug, Deserialize)]
struct RawSpecDoc {
    name: String,
    kind: ModuleKind,
    strategy: StrategyKind,
    #[serde(default)]
    params: BTreeMap<String, i64>,
    #[serde(default)]
    prompt_template: String,
    #[serde(default)]
    description: String,
}

fn parse_spec_docs(text: &str) -> Vec<RawSpecDoc> {
    serde_json::from_str::<Vec<RawSpecDoc>>(fenced_body(text).trim()).unwrap_or_default()
}

/// Rename on collision by suffixing "-v2" until unique within the pool.
fn dedup_name(pools: &ModulePools, kind: ModuleKind, name: &str) -> String {
    let mut candidate = name.to_string();
    while pools.find(kind, &candidate).is_some() {
        candidate.push_str("-v2");
    }
    candidate
}

/// Seeded mutation of one of the parent's non-sentinel specs: perturb one
/// bounded param and rename.
fn mutate_parent_spec<R: Rng>(
    parent_specs: &[&ModuleSpec; 4],
    pools: &ModulePools,
    rng: &mut R,
) -> ModuleSpec {
    let real: Vec<&&ModuleSpec> = parent_specs.iter().filter(|s| !s.is_sentinel()).collect();
    let base = *real[rng.gen_range(0..real.len())];
    let mut spec = base.clone();
    if !spec.params.is_empty() {
        let keys: Vec<String> = spec.params.keys().cloned().collect();
        let key = &keys[rng.gen_range(0..keys.len())];
        let (lo, hi) = crate::model::param_bounds(key).unwrap_or((i64::MIN, i64::MAX));
        let old = spec.params[key];
        let bumped = if rng.gen_bool(0.5) { old + 1 } else { old - 1 };
        let new = bumped.clamp(lo, hi);
        let new = if new == old {
            // At a bound: step the other way so the mutant actually differs.
            (old + if bumped > old { -1 } else { 1 }).clamp(lo, hi)
        } else {
            new
        };
        spec.params.insert(key.clone(), new);
    }
    let mut i = 1;
    let mut name = format!("{}-m{}", base.name, i);
    while pools.find(base.kind, &name).is_some() {
        i += 1;
        name = format!("{}-m{}", base.name, i);
    }
    spec.name = name;
    spec.origin = Origin::Evolved;
    spec.parent_name = Some(base.name.clone());
    spec
}

/// Ask the provider for N new module spec documents, append the valid ones to
/// their pools, and return one single-slot child per new spec. Invalid
/// documents get one collective re-ask, then seeded param-mutation fallbacks.
pub fn evolve<R: Rng>(
    parent: &AgentConfig,
    task: &TaskSpec,
    n: usize,
    pools: &mut ModulePools,
    experience: &ExperiencePool,
    llm: &Gateway,
    rng: &mut R,
) -> Result<EvolveOutcome> {
    pools.validate_config(parent)?;
    let parent_specs_owned: [ModuleSpec; 4] = {
        let refs = pools.resolve(parent)?;
        [
            refs[0].clone(),
            refs[1].clone(),
            refs[2].clone(),
            refs[3].clone(),
        ]
    };
    let parent_specs_text = serde_json::to_string_pretty(&parent_specs_owned)?;
    let prompt = render(
        EVOLUTION_TEMPLATE,
        &[
            ("task", &task.description),
            ("parent_specs", &parent_specs_text),
            ("pools", &pool_listing(pools)),
            ("experience", &experience_lines(experience, OPERATOR_CONTEXT_K)),
            ("count", &n.to_string()),
        ],
    );

    let mut new_specs: Vec<ModuleSpec> = Vec::new();
    for _ in 0..2 {
        let resp = llm.complete(&CompletionRequest::new(prompt.clone()))?;
        for doc in parse_spec_docs(&resp.text) {
            if new_specs.len() == n {
                break;
            }
            let spec = ModuleSpec {
                name: dedup_name(pools, doc.kind, &doc.name),
                kind: doc.kind,
                strategy: doc.strategy,
                params: doc.params,
                prompt_template: doc.prompt_template,
                description: doc.description,
                origin: Origin::Evolved,
                parent_name: Some(parent.slot(doc.kind).to_string()),
            };
            if spec.name == SENTINEL || !validate_module_spec(&spec, pools).is_ok() {
                continue;
            }
            pools.insert(spec.clone())?;
            new_specs.push(spec);
        }
        if new_specs.len() == n {
            break;
        }
    }

    let fallback_count = n - new_specs.len();
    for _ in 0..fallback_count {
        let spec = {
            let parent_refs = pools.resolve(parent)?;
            mutate_parent_spec(&parent_refs, pools, rng)
        };
        pools.insert(spec.clone())?;
        new_specs.push(spec);
    }

    let children = new_specs
        .iter()
        .map(|spec| {
            let mut child = parent.clone();
            child.set_slot(spec.kind, spec.name.clone());
            child
        })
        .collect();
    Ok(EvolveOutcome {
        new_specs,
        children,
        fallback_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, MockBackend, MockPolicy, MockRule};
    use crate::seed::seed_pools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn task() -> TaskSpec {
        TaskSpec {
            id: "t".to_string(),
            description: "a task".to_string(),
            tools: vec![],
            max_trials: 1,
            max_steps_per_trial: 1,
        }
    }

    fn silent() -> Gateway {
        Gateway::new(Box::new(MockBackend::new(
            vec![],
            MockPolicy::Default("no structured output".to_string()),
        )))
    }

    fn scripted(response: &str) -> Gateway {
        Gateway::new(Box::new(MockBackend::new(
            vec![MockRule::simple(".*", response)],
            MockPolicy::Strict,
        )))
    }

    fn minimal_pools() -> ModulePools {
        use crate::model::ModuleKind::*;
        use crate::model::StrategyKind;
        let mut pools = ModulePools::new();
        let spec = |name: &str, kind, strategy| ModuleSpec {
            name: name.to_string(),
            kind,
            strategy,
            params: BTreeMap::new(),
            prompt_template: String::new(),
            description: String::new(),
            origin: Origin::Seed,
            parent_name: None,
        };
        pools.insert(spec("none", Planning, StrategyKind::None)).unwrap();
        pools.insert(spec("P1", Planning, StrategyKind::PlanList)).unwrap();
        pools.insert(spec("R1", Reasoning, StrategyKind::SingleShot)).unwrap();
        pools.insert(spec("none", ToolUse, StrategyKind::None)).unwrap();
        pools.insert(spec("T1", ToolUse, StrategyKind::ToolMatch)).unwrap();
        pools.insert(spec("none", Memory, StrategyKind::None)).unwrap();
        pools.insert(spec("M1", Memory, StrategyKind::MemoryRecency)).unwrap();
        pools
    }

    #[test]
    fn backfill_flips_at_least_one_slot_on_minimal_pools() {
        let pools = minimal_pools();
        let parent = AgentConfig::new("P1", "R1", "T1", "M1");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = recombine(&parent, &task(), 1, &pools, &ExperiencePool::new(), &silent(), &mut rng)
            .unwrap();
        assert_eq!(out.configs.len(), 1);
        assert_eq!(out.fallback_count, 1);
        let c = &out.configs[0];
        assert_ne!(*c, parent);
        assert!(pools.validate_config(c).is_ok());
        // The only way to differ here is a sentinel in P, T, or M.
        assert!(c.planning == "none" || c.tooluse == "none" || c.memory == "none");
    }

    #[test]
    fn unknown_module_name_is_rejected_and_reasked() {
        let pools = minimal_pools();
        let parent = AgentConfig::new("P1", "R1", "T1", "M1");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gw = scripted(
            "```json\n[{\"planning\":\"P1\",\"reasoning\":\"HTSS\",\"tooluse\":\"T1\",\"memory\":\"M1\"}]\n```",
        );
        let out =
            recombine(&parent, &task(), 1, &pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(gw.call_count(), 2, "one ask plus one re-ask");
        assert_eq!(out.fallback_count, 1);
        assert!(pools.validate_config(&out.configs[0]).is_ok());
    }

    #[test]
    fn known_good_combination_is_accepted_verbatim() {
        let pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gw = scripted(
            "```json\n[{\"planning\":\"TD\",\"reasoning\":\"SF-ToT\",\"tooluse\":\"none\",\"memory\":\"generative_agents\"}]\n```",
        );
        let out =
            recombine(&parent, &task(), 1, &pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(out.fallback_count, 0);
        assert_eq!(
            out.configs[0],
            AgentConfig::new("TD", "SF-ToT", "none", "generative_agents")
        );
    }

    #[test]
    fn proposals_are_pairwise_distinct_and_differ_from_parent() {
        let pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Duplicate of the parent and a repeated proposal both get dropped.
        let gw = scripted(
            "```json\n[\
             {\"planning\":\"IO\",\"reasoning\":\"CoT\",\"tooluse\":\"none\",\"memory\":\"none\"},\
             {\"planning\":\"TD\",\"reasoning\":\"CoT\",\"tooluse\":\"none\",\"memory\":\"none\"},\
             {\"planning\":\"TD\",\"reasoning\":\"CoT\",\"tooluse\":\"none\",\"memory\":\"none\"}]\n```",
        );
        let out =
            recombine(&parent, &task(), 3, &pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(out.configs.len(), 3);
        assert_eq!(out.fallback_count, 2);
        for (i, a) in out.configs.iter().enumerate() {
            assert_ne!(*a, parent);
            for b in &out.configs[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn insufficient_pool_is_an_error() {
        let mut pools = ModulePools::new();
        let spec = |name: &str, kind, strategy| ModuleSpec {
            name: name.to_string(),
            kind,
            strategy,
            params: BTreeMap::new(),
            prompt_template: String::new(),
            description: String::new(),
            origin: Origin::Seed,
            parent_name: None,
        };
        use crate::model::ModuleKind::*;
        pools.insert(spec("P1", Planning, StrategyKind::PlanList)).unwrap();
        pools.insert(spec("R1", Reasoning, StrategyKind::SingleShot)).unwrap();
        pools.insert(spec("none", ToolUse, StrategyKind::None)).unwrap();
        pools.insert(spec("none", Memory, StrategyKind::None)).unwrap();
        let parent = AgentConfig::new("P1", "R1", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = recombine(&parent, &task(), 1, &pools, &ExperiencePool::new(), &silent(), &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::InsufficientPool { need: 1 }));
    }

    #[test]
    fn evolved_spec_grows_pool_and_mutates_one_slot() {
        let mut pools = seed_pools();
        let before = pools.sizes();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gw = scripted(
            "```json\n[{\"name\":\"CoT-SC-5\",\"kind\":\"reasoning\",\"strategy\":\"sample_and_vote\",\"params\":{\"sample_count\":5},\"prompt_template\":\"{subtask}\",\"description\":\"five-vote\"}]\n```",
        );
        let out =
            evolve(&parent, &task(), 1, &mut pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(out.fallback_count, 0);
        assert_eq!(pools.sizes()[1], before[1] + 1);
        assert_eq!(out.children[0], AgentConfig::new("IO", "CoT-SC-5", "none", "none"));
        let spec = pools.find(ModuleKind::Reasoning, "CoT-SC-5").unwrap();
        assert_eq!(spec.origin, Origin::Evolved);
        assert_eq!(spec.parent_name.as_deref(), Some("CoT"));
    }

    #[test]
    fn out_of_bounds_param_falls_back_to_seeded_mutation() {
        let mut pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gw = scripted(
            "```json\n[{\"name\":\"Wild\",\"kind\":\"reasoning\",\"strategy\":\"sample_and_vote\",\"params\":{\"sample_count\":99},\"prompt_template\":\"{subtask}\",\"description\":\"too many\"}]\n```",
        );
        let out =
            evolve(&parent, &task(), 1, &mut pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(gw.call_count(), 2);
        assert_eq!(out.fallback_count, 1);
        assert!(pools.find(ModuleKind::Reasoning, "Wild").is_none());
        assert_eq!(out.children.len(), 1);
        assert_eq!(out.children[0].hamming(&parent), 1);
    }

    #[test]
    fn multi_kind_documents_yield_single_slot_children() {
        let mut pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gw = scripted(
            "```json\n[\
             {\"name\":\"NewPlan\",\"kind\":\"planning\",\"strategy\":\"plan_list\",\"prompt_template\":\"{task}\"},\
             {\"name\":\"NewReason\",\"kind\":\"reasoning\",\"strategy\":\"single_shot\",\"prompt_template\":\"{subtask}\"},\
             {\"name\":\"NewMemory\",\"kind\":\"memory\",\"strategy\":\"memory_recency\",\"prompt_template\":\"\"}]\n```",
        );
        let out =
            evolve(&parent, &task(), 3, &mut pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(out.children.len(), 3);
        let expected = [
            AgentConfig::new("NewPlan", "CoT", "none", "none"),
            AgentConfig::new("IO", "NewReason", "none", "none"),
            AgentConfig::new("IO", "CoT", "none", "NewMemory"),
        ];
        assert_eq!(out.children, expected);
        for c in &out.children {
            assert_eq!(c.hamming(&parent), 1);
        }
    }

    #[test]
    fn colliding_name_is_renamed_with_v2_suffix() {
        let mut pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "none");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gw = scripted(
            "```json\n[{\"name\":\"CoT\",\"kind\":\"reasoning\",\"strategy\":\"single_shot\",\"prompt_template\":\"{subtask}\"}]\n```",
        );
        let out =
            evolve(&parent, &task(), 1, &mut pools, &ExperiencePool::new(), &gw, &mut rng).unwrap();
        assert_eq!(out.new_specs[0].name, "CoT-v2");
        assert!(pools.find(ModuleKind::Reasoning, "CoT-v2").is_some());
    }

    #[test]
    fn silent_provider_evolution_still_returns_n_children() {
        let mut pools = seed_pools();
        let parent = AgentConfig::new("IO", "CoT", "none", "Dilu");
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let out = evolve(
            &parent,
            &task(),
            3,
            &mut pools,
            &ExperiencePool::new(),
            &silent(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.fallback_count, 3);
        assert_eq!(out.children.len(), 3);
        for c in &out.children {
            assert_eq!(c.hamming(&parent), 1);
            assert!(pools.validate_config(c).is_ok());
        }
    }
}
