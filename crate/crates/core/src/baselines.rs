//! Baseline searchers over the same design space: uniform random combination
//! search and an additive-surrogate search with a count-based UCB bonus.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    AgentConfig, ExperiencePool, ExperienceRecord, ModuleKind, ModulePools, RecordSource,
};
use crate::search::{Evaluator, IterationRow, SearchResult, valid_combination_count};

/// Exhaustive-enumeration guard for the surrogate baseline.
const ENUMERATION_LIMIT: u64 = 20_000;

/// Ridge damping for the additive surrogate fit.
const RIDGE_LAMBDA: f64 = 0.1;

/// All valid configs in nested (P, R, T, M) enumeration order; the reasoning
/// sentinel is skipped.
fn enumerate_configs(pools: &ModulePools) -> Vec<AgentConfig> {
    let mut out = Vec::new();
    for p in pools.members(ModuleKind::Planning) {
        for r in pools.members(ModuleKind::Reasoning) {
            if r.is_sentinel() {
                continue;
            }
            for t in pools.members(ModuleKind::ToolUse) {
                for m in pools.members(ModuleKind::Memory) {
                    out.push(AgentConfig::new(&p.name, &r.name, &t.name, &m.name));
                }
            }
        }
    }
    out
}

struct BaselineRun<'a> {
    evaluator: &'a dyn Evaluator,
    experience: &'a mut ExperiencePool,
    phase: &'static str,
    best: Option<(AgentConfig, f64)>,
    rows: Vec<IterationRow>,
    tokens: u64,
}

impl<'a> BaselineRun<'a> {
    fn new(
        evaluator: &'a dyn Evaluator,
        experience: &'a mut ExperiencePool,
        phase: &'static str,
    ) -> Self {
        BaselineRun {
            evaluator,
            experience,
            phase,
            best: None,
            rows: Vec::new(),
            tokens: 0,
        }
    }

    fn observe(&mut self, agent: &AgentConfig, pools: &ModulePools) -> Result<f64> {
        let (score, token_cost) = self.evaluator.evaluate(agent, pools)?;
        self.tokens += token_cost;
        let episode = self.rows.len();
        self.experience.append(ExperienceRecord {
            agent: agent.clone(),
            score,
            token_cost,
            task_id: self.evaluator.task_id().to_string(),
            episode,
            source: RecordSource::Baseline,
        });
        let improved = self.best.as_ref().map_or(true, |(_, b)| score > *b);
        if improved {
            self.best = Some((agent.clone(), score));
        }
        self.rows.push(IterationRow {
            iteration: episode,
            phase: self.phase.to_string(),
            best_so_far: self.best.as_ref().unwrap().1,
            real_evals_cum: episode + 1,
            tokens_cum: self.tokens,
        });
        Ok(score)
    }

    fn finish(self, searcher: &str, seed: u64) -> SearchResult {
        let (best, best_score) = self.best.expect("at least one evaluation");
        SearchResult {
            searcher: searcher.to_string(),
            task_id: self.evaluator.task_id().to_string(),
            seed,
            best,
            best_score,
            real_evals: self.rows.len(),
            tokens: self.tokens,
            fallbacks: 0,
            terminated_stale: false,
            iterations: self.rows,
        }
    }
}

/// Seeded uniform sampling without replacement; a budget beyond the space
/// size evaluates every config once and stops.
pub fn random_search(
    budget: usize,
    evaluator: &dyn Evaluator,
    pools: &ModulePools,
    experience: &mut ExperiencePool,
    seed: u64,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be >= 1".to_string()));
    }
    let count = valid_combination_count(pools);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = BaselineRun::new(evaluator, experience, "random");

    if budget as u64 >= count {
        for agent in enumerate_configs(pools) {
            run.observe(&agent, pools)?;
        }
    } else {
        let mut seen: HashSet<AgentConfig> = HashSet::new();
        while seen.len() < budget {
            let agent = crate::search::random_valid_config(pools, &mut rng);
            if seen.insert(agent.clone()) {
                run.observe(&agent, pools)?;
            }
        }
    }
    Ok(run.finish("random", seed))
}

/// Indicator encoding: one column per pool member, offset by kind.
fn feature_offsets(pools: &ModulePools) -> ([usize; 4], usize) {
    let sizes = pools.sizes();
    let mut offsets = [0usize; 4];
    let mut total = 0;
    for (i, s) in sizes.iter().enumerate() {
        offsets[i] = total;
        total += s;
    }
    (offsets, total)
}

fn feature_indices(agent: &AgentConfig, pools: &ModulePools, offsets: &[usize; 4]) -> [usize; 4] {
    let mut idx = [0usize; 4];
    for (i, kind) in ModuleKind::ALL.into_iter().enumerate() {
        idx[i] = offsets[i]
            + pools
                .position(kind, agent.slot(kind))
                .expect("observed config resolves");
    }
    idx
}

/// Additive-surrogate search: warm-start randomly, then repeatedly fit
/// ridge-damped per-module effects over an indicator encoding and acquire the
/// unobserved config maximizing mean + ucb_beta * uncertainty, where the
/// uncertainty is a per-slot observation-count bonus. Ties resolve to
/// enumeration order.
pub fn bayesian_search(
    budget: usize,
    init_samples: usize,
    ucb_beta: f64,
    evaluator: &dyn Evaluator,
    pools: &ModulePools,
    experience: &mut ExperiencePool,
    seed: u64,
) -> Result<SearchResult> {
    if init_samples == 0 || init_samples >= budget {
        return Err(Error::InvalidConfig(format!(
            "init_samples {init_samples} must be in [1, budget {budget})"
        )));
    }
    let count = valid_combination_count(pools);
    if count > ENUMERATION_LIMIT {
        return Err(Error::LandscapeTooLarge(count));
    }
    let all = enumerate_configs(pools);
    let (offsets, dim) = feature_offsets(pools);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = BaselineRun::new(evaluator, experience, "bayesian");

    let mut observed: Vec<(AgentConfig, f64)> = Vec::new();
    let mut observed_set: HashSet<AgentConfig> = HashSet::new();
    let mut module_counts = vec![0usize; dim];
    let observe =
        |agent: &AgentConfig,
         run: &mut BaselineRun,
         observed: &mut Vec<(AgentConfig, f64)>,
         observed_set: &mut HashSet<AgentConfig>,
         module_counts: &mut Vec<usize>|
         -> Result<()> {
            let score = run.observe(agent, pools)?;
            for i in feature_indices(agent, pools, &offsets) {
                module_counts[i] += 1;
            }
            observed.push((agent.clone(), score));
            observed_set.insert(agent.clone());
            Ok(())
        };

    // Warm start.
    let warm = init_samples.min(count as usize);
    while observed.len() < warm {
        let agent = crate::search::random_valid_config(pools, &mut rng);
        if !observed_set.contains(&agent) {
            observe(
                &agent,
                &mut run,
                &mut observed,
                &mut observed_set,
                &mut module_counts,
            )?;
        }
    }

    while observed.len() < budget && observed.len() < count as usize {
        // Ridge fit: (X'X + lambda I) beta = X'y.
        let n = observed.len();
        let mut x = DMatrix::<f64>::zeros(n, dim);
        let mut y = DVector::<f64>::zeros(n);
        for (row, (agent, score)) in observed.iter().enumerate() {
            for col in feature_indices(agent, pools, &offsets) {
                x[(row, col)] = 1.0;
            }
            y[row] = *score;
        }
        let xt = x.transpose();
        let gram = &xt * &x + DMatrix::<f64>::identity(dim, dim) * RIDGE_LAMBDA;
        let beta = gram
            .lu()
            .solve(&(&xt * &y))
            .ok_or_else(|| Error::InvalidConfig("singular surrogate system".to_string()))?;

        let mut best: Option<(usize, f64)> = None;
        for (i, agent) in all.iter().enumerate() {
            if observed_set.contains(agent) {
                continue;
            }
            let feats = feature_indices(agent, pools, &offsets);
            let mean: f64 = feats.iter().map(|&f| beta[f]).sum();
            let uncertainty: f64 = feats
                .iter()
                .map(|&f| 1.0 / (1.0 + module_counts[f] as f64).sqrt())
                .sum();
            let acq = mean + ucb_beta * uncertainty;
            // Strictly greater keeps the earliest enumeration index on ties.
            if best.map_or(true, |(_, b)| acq > b) {
                best = Some((i, acq));
            }
        }
        let Some((pick, _)) = best else { break };
        let agent = all[pick].clone();
        observe(
            &agent,
            &mut run,
            &mut observed,
            &mut observed_set,
            &mut module_counts,
        )?;
    }
    Ok(run.finish("bayesian", seed))
}
