//! Oracle landscape: a closed-form, seeded scoring function over agent
//! configurations. Main effects per module, sparse pairwise cross-kind
//! interactions, and deterministic per-config noise. Small instances are
//! brute-forceable, which makes the landscape the test oracle for every
//! searcher.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::fnv64;
use crate::model::{
    AgentConfig, ModuleKind, ModulePools, ModuleSpec, Origin, StrategyKind, SENTINEL,
};

/// One cross-kind pairwise interaction term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEffect {
    pub kind_a: ModuleKind,
    pub idx_a: usize,
    pub kind_b: ModuleKind,
    pub idx_b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleLandscape {
    pub pool_sizes: [usize; 4],
    pub base: f64,
    /// `main_effects[kind][index]` for the seeded pool members.
    pub main_effects: Vec<Vec<f64>>,
    pub pairwise_effects: Vec<PairEffect>,
    pub noise_sigma: f64,
    /// Scale of the deterministic per-name adjustment evolved modules inherit
    /// on top of their ancestor's effects.
    pub evolved_sigma: f64,
    pub seed: u64,
}

/// Exhaustive-oracle limit on the Cartesian product size.
pub const EXHAUSTIVE_LIMIT: u64 = 5000;

fn seeded_normal(key: &str, seed: u64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv64(key));
    Normal::new(0.0, sigma).unwrap().sample(&mut rng)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

impl OracleLandscape {
    /// Seeded random instance. `interaction_sigma = 0` yields a purely
    /// additive landscape.
    pub fn generate(
        pool_sizes: [usize; 4],
        seed: u64,
        noise_sigma: f64,
        main_sigma: f64,
        interaction_density: f64,
        interaction_sigma: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let main_effects: Vec<Vec<f64>> = pool_sizes
            .iter()
            .map(|&n| {
                let dist = Normal::new(0.0, main_sigma).unwrap();
                (0..n).map(|_| dist.sample(&mut rng)).collect()
            })
            .collect();
        let mut pairwise_effects = Vec::new();
        if interaction_sigma > 0.0 && interaction_density > 0.0 {
            let dist = Normal::new(0.0, interaction_sigma).unwrap();
            for (a, &ka) in ModuleKind::ALL.iter().enumerate() {
                for (b, &kb) in ModuleKind::ALL.iter().enumerate().skip(a + 1) {
                    for ia in 0..pool_sizes[a] {
                        for ib in 0..pool_sizes[b] {
                            if rng.gen::<f64>() < interaction_density {
                                pairwise_effects.push(PairEffect {
                                    kind_a: ka,
                                    idx_a: ia,
                                    kind_b: kb,
                                    idx_b: ib,
                                    weight: dist.sample(&mut rng),
                                });
                            }
                        }
                    }
                }
            }
        }
        OracleLandscape {
            pool_sizes,
            base: 0.5,
            main_effects,
            pairwise_effects,
            noise_sigma,
            evolved_sigma: 0.05,
            seed,
        }
    }

    pub fn combination_count(&self) -> u64 {
        self.pool_sizes.iter().map(|&n| n as u64).product()
    }

    /// Resolve a pool member to its seed ancestor index plus the chain of
    /// evolved names encountered on the way.
    fn resolve_ancestry<'a>(
        &self,
        pools: &'a ModulePools,
        kind: ModuleKind,
        name: &'a str,
    ) -> Result<(usize, Vec<&'a str>)> {
        let mut chain = Vec::new();
        let mut current = name;
        loop {
            let pos = pools
                .position(kind, current)
                .ok_or_else(|| Error::UnknownModule {
                    slot: kind.label(),
                    name: current.to_string(),
                })?;
            if pos < self.pool_sizes[kind.index()] {
                return Ok((pos, chain));
            }
            chain.push(current);
            let spec = pools.find(kind, current).unwrap();
            match &spec.parent_name {
                Some(parent) => current = parent.as_str(),
                // No ancestry back into the seeded range: treat as index 0.
                None => return Ok((0, chain)),
            }
        }
    }

    fn score_resolved(&self, resolved: &[(usize, Vec<&str>)]) -> f64 {
        let mut score = self.base;
        for (kind, (idx, chain)) in ModuleKind::ALL.iter().zip(resolved) {
            score += self.main_effects[kind.index()][*idx];
            for name in chain {
                score += seeded_normal(&format!("evo:{}:{name}", kind.label()), self.seed, self.evolved_sigma);
            }
        }
        for pe in &self.pairwise_effects {
            if resolved[pe.kind_a.index()].0 == pe.idx_a && resolved[pe.kind_b.index()].0 == pe.idx_b {
                score += pe.weight;
            }
        }
        let identity = ModuleKind::ALL
            .iter()
            .zip(resolved)
            .map(|(k, (idx, chain))| format!("{}:{}+{}", k.label(), idx, chain.join("+")))
            .collect::<Vec<_>>()
            .join("|");
        score += seeded_normal(&format!("noise:{identity}"), self.seed, self.noise_sigma);
        clamp01(score)
    }

    /// Score by seed-pool indices directly (all modules unevolved).
    pub fn score_indices(&self, idx: [usize; 4]) -> f64 {
        let resolved: Vec<(usize, Vec<&str>)> = idx.iter().map(|&i| (i, Vec::new())).collect();
        self.score_resolved(&resolved)
    }

    /// Closed-form score of an agent configuration resolved against pools.
    /// Evolved pool members inherit their seed ancestor's effects plus a
    /// deterministic per-name adjustment.
    pub fn score_config(&self, agent: &AgentConfig, pools: &ModulePools) -> Result<f64> {
        let resolved: Vec<(usize, Vec<&str>)> = ModuleKind::ALL
            .iter()
            .map(|&k| self.resolve_ancestry(pools, k, agent.slot(k)))
            .collect::<Result<_>>()?;
        Ok(self.score_resolved(&resolved))
    }

    /// Exhaustive enumeration over the seed Cartesian product; deterministic
    /// tie-break by enumeration order.
    pub fn optimum(&self) -> Result<([usize; 4], f64)> {
        let count = self.combination_count();
        if count > EXHAUSTIVE_LIMIT {
            return Err(Error::LandscapeTooLarge(count));
        }
        let [np, nr, nt, nm] = self.pool_sizes;
        let mut best = ([0usize; 4], f64::NEG_INFINITY);
        for p in 0..np {
            for r in 0..nr {
                for t in 0..nt {
                    for m in 0..nm {
                        let s = self.score_indices([p, r, t, m]);
                        if s > best.1 {
                            best = ([p, r, t, m], s);
                        }
                    }
                }
            }
        }
        Ok(best)
    }
}

/// Synthetic pools matching a landscape's sizes. The planning, tool-use, and
/// memory pools start with the sentinel; remaining members carry generated
/// names (`P1`, `R0`, ...).
pub fn synthetic_pools(pool_sizes: [usize; 4]) -> ModulePools {
    let mut pools = ModulePools::new();
    for (i, kind) in ModuleKind::ALL.into_iter().enumerate() {
        let (prefix, strategy) = match kind {
            ModuleKind::Planning => ("P", StrategyKind::PlanList),
            ModuleKind::Reasoning => ("R", StrategyKind::SingleShot),
            ModuleKind::ToolUse => ("T", StrategyKind::ToolMatch),
            ModuleKind::Memory => ("M", StrategyKind::MemoryRecency),
        };
        for j in 0..pool_sizes[i] {
            let spec = if j == 0 && kind != ModuleKind::Reasoning {
                ModuleSpec {
                    name: SENTINEL.to_string(),
                    kind,
                    strategy: StrategyKind::None,
                    params: Default::default(),
                    prompt_template: String::new(),
                    description: String::new(),
                    origin: Origin::Seed,
                    parent_name: None,
                }
            } else {
                ModuleSpec {
                    name: format!("{prefix}{j}"),
                    kind,
                    strategy,
                    params: Default::default(),
                    prompt_template: String::new(),
                    description: format!("synthetic {} member {j}", kind.label()),
                    origin: Origin::Seed,
                    parent_name: None,
                }
            };
            pools.insert(spec).expect("synthetic spec is valid");
        }
    }
    pools
}

/// Agent config addressing the seed members at the given indices.
pub fn config_at(pools: &ModulePools, idx: [usize; 4]) -> AgentConfig {
    AgentConfig {
        planning: pools.members(ModuleKind::Planning)[idx[0]].name.clone(),
        reasoning: pools.members(ModuleKind::Reasoning)[idx[1]].name.clone(),
        tooluse: pools.members(ModuleKind::ToolUse)[idx[2]].name.clone(),
        memory: pools.members(ModuleKind::Memory)[idx[3]].name.clone(),
    }
}

/// Direct closed-form evaluator over a landscape; zero token cost.
pub struct LandscapeEvaluator {
    pub landscape: OracleLandscape,
    pub task_id: String,
}

impl LandscapeEvaluator {
    pub fn new(landscape: OracleLandscape, task_id: impl Into<String>) -> Self {
        LandscapeEvaluator {
            landscape,
            task_id: task_id.into(),
        }
    }
}

impl crate::search::Evaluator for LandscapeEvaluator {
    fn evaluate(&self, agent: &AgentConfig, pools: &ModulePools) -> Result<(f64, u64)> {
        Ok((self.landscape.score_config(agent, pools)?, 0))
    }

    fn task_id(&self) -> &str {
        &self.task_id
    }
}
