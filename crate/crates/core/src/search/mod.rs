//! The alternating evolution / recombination search loop with predictor
//! screening and elitist selection.

pub mod operators;
pub mod predictor;

pub use operators::{evolve, random_valid_config, recombine, valid_combination_count};
pub use predictor::{knn_predict, llm_predict, predict};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::make_task;
use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::model::{
    AgentConfig, ExperiencePool, ExperienceRecord, ModulePools, PredictorId, RecordSource,
    TaskSpec,
};
use crate::workflow::run_episode;

/// Scores one agent config for real. Implementations: closed-form landscape
/// evaluation and full workflow episodes.
pub trait Evaluator {
    /// Returns (score in [0,1], token cost of the evaluation).
    fn evaluate(&self, agent: &AgentConfig, pools: &ModulePools) -> Result<(f64, u64)>;
    fn task_id(&self) -> &str;
}

/// Runs a full episode per evaluation on a fresh environment handle, with a
/// fresh gateway so evaluation tokens are accounted separately from the
/// search loop's own provider calls.
pub struct WorkflowEvaluator<F: Fn() -> Gateway> {
    pub task_id: String,
    pub seed: u64,
    pub gateway_factory: F,
}

impl<F: Fn() -> Gateway> Evaluator for WorkflowEvaluator<F> {
    fn evaluate(&self, agent: &AgentConfig, pools: &ModulePools) -> Result<(f64, u64)> {
        let inst = make_task(&self.task_id, self.seed)?;
        let mut env = inst.env;
        let gw = (self.gateway_factory)();
        let traj = run_episode(agent, pools, &inst.task, env.as_mut(), &inst.registry, &gw)?;
        let (tin, tout) = gw.total_tokens();
        Ok((traj.final_score, tin + tout))
    }

    fn task_id(&self) -> &str {
        &self.task_id
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchParams {
    pub max_episodes: usize,
    pub population: usize,
    pub stale_limit: usize,
    pub predictor: PredictorId,
    pub screen_k: usize,
    pub disable_evolution: bool,
    pub disable_recombination: bool,
    pub seed: u64,
    /// Optional fixed starting point; defaults to a seeded random combination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<AgentConfig>,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            max_episodes: 15,
            population: 4,
            stale_limit: 5,
            predictor: PredictorId::Knn,
            screen_k: 2,
            disable_evolution: false,
            disable_recombination: false,
            seed: 0,
            initial: None,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.disable_evolution && self.disable_recombination {
            return Err(Error::NoOperators);
        }
        if self.max_episodes == 0 || self.population == 0 || self.stale_limit == 0 {
            return Err(Error::InvalidConfig(
                "max_episodes, population, and stale_limit must be positive".to_string(),
            ));
        }
        if self.screen_k == 0 || self.screen_k > self.population {
            return Err(Error::InvalidConfig(format!(
                "screen_k {} outside [1, {}]",
                self.screen_k, self.population
            )));
        }
        Ok(())
    }
}

/// One row of the convergence trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub phase: String,
    pub best_so_far: f64,
    pub real_evals_cum: usize,
    pub tokens_cum: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub searcher: String,
    pub task_id: String,
    pub seed: u64,
    pub best: AgentConfig,
    pub best_score: f64,
    pub iterations: Vec<IterationRow>,
    pub real_evals: usize,
    pub tokens: u64,
    pub fallbacks: usize,
    pub terminated_stale: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum PhaseKind {
    Evolution,
    Recombination,
}

impl PhaseKind {
    fn label(self) -> &'static str {
        match self {
            PhaseKind::Evolution => "evolution",
            PhaseKind::Recombination => "recombination",
        }
    }

    fn source(self) -> RecordSource {
        match self {
            PhaseKind::Evolution => RecordSource::Evolution,
            PhaseKind::Recombination => RecordSource::Recombination,
        }
    }
}

struct LoopState<'a> {
    evaluator: &'a dyn Evaluator,
    experience: &'a mut ExperiencePool,
    real_evals: usize,
    eval_tokens: u64,
    fallbacks: usize,
}

impl<'a> LoopState<'a> {
    fn real_evaluate(
        &mut self,
        agent: &AgentConfig,
        pools: &ModulePools,
        episode: usize,
        source: RecordSource,
    ) -> Result<f64> {
        let (score, tokens) = self.evaluator.evaluate(agent, pools)?;
        self.real_evals += 1;
        self.eval_tokens += tokens;
        self.experience.append(ExperienceRecord {
            agent: agent.clone(),
            score,
            token_cost: tokens,
            task_id: self.evaluator.task_id().to_string(),
            episode,
            source,
        });
        Ok(score)
    }
}

/// Alternating-phase elitist search. Each phase proposes `population`
/// candidates, screens them with the predictor, real-evaluates the top
/// `screen_k` in candidate index order, and keeps the incumbent unless a
/// candidate strictly beats it. Terminates after `stale_limit` consecutive
/// phases without improvement.
pub fn run_search(
    params: &SearchParams,
    task: &TaskSpec,
    evaluator: &dyn Evaluator,
    pools: &mut ModulePools,
    experience: &mut ExperiencePool,
    llm: &Gateway,
) -> Result<SearchResult> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let llm_base = {
        let (i, o) = llm.total_tokens();
        i + o
    };
    let mut state = LoopState {
        evaluator,
        experience,
        real_evals: 0,
        eval_tokens: 0,
        fallbacks: 0,
    };

    let mut incumbent = match &params.initial {
        Some(agent) => {
            pools.validate_config(agent)?;
            agent.clone()
        }
        None => random_valid_config(pools, &mut rng),
    };
    let mut incumbent_score = state.real_evaluate(&incumbent, pools, 0, RecordSource::Init)?;

    let tokens_now = |state: &LoopState, llm: &Gateway| {
        let (i, o) = llm.total_tokens();
        (i + o - llm_base) + state.eval_tokens
    };

    let mut iterations = vec![IterationRow {
        iteration: 0,
        phase: "init".to_string(),
        best_so_far: incumbent_score,
        real_evals_cum: state.real_evals,
        tokens_cum: tokens_now(&state, llm),
    }];

    let phases: Vec<PhaseKind> = [
        (!params.disable_evolution).then_some(PhaseKind::Evolution),
        (!params.disable_recombination).then_some(PhaseKind::Recombination),
    ]
    .into_iter()
    .flatten()
    .collect();

    let mut stale = 0usize;
    let mut iteration = 0usize;
    let mut terminated_stale = false;

    'outer: for episode in 1..=params.max_episodes {
        for phase in &phases {
            iteration += 1;
            let candidates = match *phase {
                PhaseKind::Evolution => evolve(
                    &incumbent,
                    task,
                    params.population,
                    pools,
                    state.experience,
                    llm,
                    &mut rng,
                )
                .map(|o| {
                    state.fallbacks += o.fallback_count;
                    o.children
                }),
                PhaseKind::Recombination => recombine(
                    &incumbent,
                    task,
                    params.population,
                    pools,
                    state.experience,
                    llm,
                    &mut rng,
                )
                .map(|o| {
                    state.fallbacks += o.fallback_count;
                    o.configs
                }),
            };
            // An operator hard failure skips the proposals, not the loop:
            // the phase runs on seeded random candidates instead.
            let candidates = candidates.unwrap_or_else(|_| {
                state.fallbacks += params.population;
                (0..params.population)
                    .map(|_| random_valid_config(pools, &mut rng))
                    .collect()
            });

            let mut predicted: Vec<(usize, f64)> = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let p = predict(c, task, pools, state.experience, params.predictor, llm)
                        .unwrap_or_else(|_| knn_predict(c, state.experience));
                    (i, p.value)
                })
                .collect();
            // Highest prediction first; ties keep the lower candidate index.
            predicted.sort_by(|(ia, va), (ib, vb)| {
                vb.partial_cmp(va)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(ia.cmp(ib))
            });
            let mut chosen: Vec<usize> = predicted
                .iter()
                .take(params.screen_k)
                .map(|(i, _)| *i)
                .collect();
            chosen.sort_unstable(); // evaluate and select in candidate index order

            let mut improved = false;
            for idx in chosen {
                let candidate = &candidates[idx];
                let score =
                    state.real_evaluate(candidate, pools, episode, phase.source())?;
                if score > incumbent_score {
                    incumbent = candidate.clone();
                    incumbent_score = score;
                    improved = true;
                }
            }

            if improved {
                stale = 0;
            } else {
                stale += 1;
            }
            iterations.push(IterationRow {
                iteration,
                phase: phase.label().to_string(),
                best_so_far: incumbent_score,
                real_evals_cum: state.real_evals,
                tokens_cum: tokens_now(&state, llm),
            });
            if stale >= params.stale_limit {
                terminated_stale = true;
                break 'outer;
            }
        }
    }

    Ok(SearchResult {
        searcher: "modular".to_string(),
        task_id: evaluator.task_id().to_string(),
        seed: params.seed,
        best: incumbent,
        best_score: incumbent_score,
        real_evals: state.real_evals,
        tokens: tokens_now(&state, llm),
        fallbacks: state.fallbacks,
        terminated_stale,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::landscape::{synthetic_pools, LandscapeEvaluator, OracleLandscape};
    use crate::gateway::{MockBackend, MockPolicy};

    fn silent() -> Gateway {
        Gateway::new(Box::new(MockBackend::new(
            vec![],
            MockPolicy::Default("no structured output".to_string()),
        )))
    }

    fn landscape_task(id: &str) -> TaskSpec {
        TaskSpec {
            id: id.to_string(),
            description: "maximize the synthetic score landscape".to_string(),
            tools: vec![],
            max_trials: 1,
            max_steps_per_trial: 1,
        }
    }

    fn setup(seed: u64) -> (OracleLandscape, ModulePools) {
        let ls = OracleLandscape::generate([4, 5, 3, 4], seed, 0.01, 0.08, 0.05, 0.06);
        let pools = synthetic_pools([4, 5, 3, 4]);
        (ls, pools)
    }

    #[test]
    fn both_operators_disabled_is_an_error() {
        let params = SearchParams {
            disable_evolution: true,
            disable_recombination: true,
            ..SearchParams::default()
        };
        assert!(matches!(params.validate(), Err(Error::NoOperators)));
    }

    #[test]
    fn screen_k_must_not_exceed_population() {
        let params = SearchParams {
            population: 2,
            screen_k: 3,
            ..SearchParams::default()
        };
        assert!(params.validate().is_err());
    }

    #[test]
    fn flat_landscape_halts_after_exactly_stale_limit_phases() {
        // Zero effects, zero noise, zero evolved drift: the initial config is
        // already optimal, so every phase is stale.
        let mut ls = OracleLandscape::generate([3, 3, 3, 3], 1, 0.0, 0.0, 0.0, 0.0);
        ls.evolved_sigma = 0.0;
        let mut pools = synthetic_pools([3, 3, 3, 3]);
        let evaluator = LandscapeEvaluator::new(ls, "flat");
        let params = SearchParams::default();
        let mut exp = ExperiencePool::new();
        let gw = silent();
        let res = run_search(
            &params,
            &landscape_task("flat"),
            &evaluator,
            &mut pools,
            &mut exp,
            &gw,
        )
        .unwrap();
        assert!(res.terminated_stale);
        // One init row plus exactly stale_limit stale phase rows.
        assert_eq!(res.iterations.len(), 1 + params.stale_limit);
        assert_eq!(res.best_score, res.iterations[0].best_so_far);
    }

    #[test]
    fn optimal_initial_config_never_moves() {
        // Noiseless and without evolved drift, so no candidate can strictly
        // beat the true optimum.
        let mut ls = OracleLandscape::generate([4, 5, 3, 4], 9, 0.0, 0.08, 0.05, 0.06);
        ls.evolved_sigma = 0.0;
        let mut pools = synthetic_pools([4, 5, 3, 4]);
        let (opt_idx, opt_score) = ls.optimum().unwrap();
        let initial = crate::env::landscape::config_at(&pools, opt_idx);
        let evaluator = LandscapeEvaluator::new(ls, "ls");
        let params = SearchParams {
            initial: Some(initial.clone()),
            ..SearchParams::default()
        };
        let mut exp = ExperiencePool::new();
        let gw = silent();
        let res = run_search(
            &params,
            &landscape_task("ls"),
            &evaluator,
            &mut pools,
            &mut exp,
            &gw,
        )
        .unwrap();
        assert!(res.terminated_stale);
        assert_eq!(res.best, initial);
        assert_eq!(res.best_score, opt_score);
        assert_eq!(res.iterations.len(), 1 + params.stale_limit);
    }

    #[test]
    fn elitism_best_so_far_is_nondecreasing() {
        for seed in 0..10 {
            let (ls, mut pools) = setup(seed);
            let evaluator = LandscapeEvaluator::new(ls, "ls");
            let params = SearchParams {
                seed,
                ..SearchParams::default()
            };
            let mut exp = ExperiencePool::new();
            let gw = silent();
            let res = run_search(
                &params,
                &landscape_task("ls"),
                &evaluator,
                &mut pools,
                &mut exp,
                &gw,
            )
            .unwrap();
            for pair in res.iterations.windows(2) {
                assert!(pair[1].best_so_far >= pair[0].best_so_far);
            }
        }
    }

    #[test]
    fn every_real_evaluation_appends_exactly_one_record() {
        let (ls, mut pools) = setup(3);
        let evaluator = LandscapeEvaluator::new(ls, "ls");
        let params = SearchParams {
            seed: 3,
            ..SearchParams::default()
        };
        let mut exp = ExperiencePool::new();
        let gw = silent();
        let res = run_search(
            &params,
            &landscape_task("ls"),
            &evaluator,
            &mut pools,
            &mut exp,
            &gw,
        )
        .unwrap();
        assert_eq!(exp.len(), res.real_evals);
        // All evaluated candidates are pool members at evaluation time.
        for rec in exp.records() {
            assert!(pools.validate_config(&rec.agent).is_ok());
        }
    }

    #[test]
    fn equal_seeds_produce_identical_results() {
        let run = |seed: u64| {
            let (ls, mut pools) = setup(7);
            let evaluator = LandscapeEvaluator::new(ls, "ls");
            let params = SearchParams {
                seed,
                ..SearchParams::default()
            };
            let mut exp = ExperiencePool::new();
            let gw = silent();
            run_search(
                &params,
                &landscape_task("ls"),
                &evaluator,
                &mut pools,
                &mut exp,
                &gw,
            )
            .unwrap()
        };
        let a = serde_json::to_string(&run(11)).unwrap();
        let b = serde_json::to_string(&run(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disabled_recombination_runs_evolution_only_phases() {
        let (ls, mut pools) = setup(5);
        let evaluator = LandscapeEvaluator::new(ls, "ls");
        let params = SearchParams {
            disable_recombination: true,
            seed: 5,
            ..SearchParams::default()
        };
        let mut exp = ExperiencePool::new();
        let gw = silent();
        let res = run_search(
            &params,
            &landscape_task("ls"),
            &evaluator,
            &mut pools,
            &mut exp,
            &gw,
        )
        .unwrap();
        assert!(res
            .iterations
            .iter()
            .skip(1)
            .all(|r| r.phase == "evolution"));
    }
}
