//! Surrogate performance prediction: a distance-weighted estimator over the
//! experience pool and an in-context LLM scorer that falls back to it.

use crate::error::Result;
use crate::gateway::{CompletionRequest, Gateway};
use crate::model::{
    AgentConfig, ExperiencePool, ModulePools, PredictedScore, PredictorId, TaskSpec,
};
use crate::store::top_k;
use crate::template::render;

const PREDICTOR_TEMPLATE: &str = include_str!("../../../../templates/predictor.txt");

/// In-context examples the LLM predictor sees, best-first.
const PREDICTOR_CONTEXT_K: usize = 30;

/// Distance-weighted mean over all experience records: w = 1/(1 + hamming).
pub fn knn_predict(candidate: &AgentConfig, experience: &ExperiencePool) -> PredictedScore {
    if experience.is_empty() {
        return PredictedScore {
            value: 0.5,
            rationale: "no experience".to_string(),
            predictor_id: PredictorId::Knn,
        };
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for rec in experience.records() {
        let w = 1.0 / (1.0 + candidate.hamming(&rec.agent) as f64);
        num += w * rec.score;
        den += w;
    }
    PredictedScore {
        value: num / den,
        rationale: format!(
            "distance-weighted mean over {} records",
            experience.len()
        ),
        predictor_id: PredictorId::Knn,
    }
}

pub(crate) fn experience_lines(experience: &ExperiencePool, k: usize) -> String {
    top_k(experience, k)
        .iter()
        .map(|r| {
            format!(
                "{} | {} | {} | {} -> {:.3}",
                r.agent.planning, r.agent.reasoning, r.agent.tooluse, r.agent.memory, r.score
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn candidate_profile(candidate: &AgentConfig, pools: &ModulePools) -> Result<String> {
    let specs = pools.resolve(candidate)?;
    Ok(specs
        .iter()
        .map(|s| {
            format!(
                "{}: {} (strategy {}, {})",
                s.kind.label(),
                s.name,
                serde_json::to_string(&s.strategy).unwrap_or_default(),
                if s.description.is_empty() {
                    "no description"
                } else {
                    &s.description
                }
            )
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

fn parse_decimal(text: &str) -> Option<f64> {
    let re = regex::Regex::new(r"\d+\.?\d*|\.\d+").unwrap();
    re.find(text).and_then(|m| m.as_str().parse::<f64>().ok())
}

/// LLM in-context prediction with one re-ask, then a recorded fallback to the
/// distance-weighted estimator.
pub fn llm_predict(
    candidate: &AgentConfig,
    task: &TaskSpec,
    pools: &ModulePools,
    experience: &ExperiencePool,
    llm: &Gateway,
) -> Result<PredictedScore> {
    let prompt = render(
        PREDICTOR_TEMPLATE,
        &[
            ("task", &task.description),
            ("candidate", &candidate_profile(candidate, pools)?),
            ("examples", &experience_lines(experience, PREDICTOR_CONTEXT_K)),
        ],
    );
    for _ in 0..2 {
        let resp = llm.complete(&CompletionRequest::new(prompt.clone()))?;
        if let Some(v) = parse_decimal(&resp.text) {
            return Ok(PredictedScore {
                value: v.clamp(0.0, 1.0),
                rationale: resp.text.trim().to_string(),
                predictor_id: PredictorId::Llm,
            });
        }
    }
    let mut fallback = knn_predict(candidate, experience);
    fallback.rationale = format!(
        "no parseable number from provider; fell back to distance weighting ({})",
        fallback.rationale
    );
    Ok(fallback)
}

/// Predict via the configured surrogate.
pub fn predict(
    candidate: &AgentConfig,
    task: &TaskSpec,
    pools: &ModulePools,
    experience: &ExperiencePool,
    predictor: PredictorId,
    llm: &Gateway,
) -> Result<PredictedScore> {
    match predictor {
        PredictorId::Knn => Ok(knn_predict(candidate, experience)),
        PredictorId::Llm => llm_predict(candidate, task, pools, experience, llm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockBackend, MockPolicy, MockRule};
    use crate::model::{ExperienceRecord, RecordSource};
    use crate::seed::seed_pools;

    fn record(agent: AgentConfig, score: f64) -> ExperienceRecord {
        ExperienceRecord {
            agent,
            score,
            token_cost: 0,
            task_id: "t".to_string(),
            episode: 0,
            source: RecordSource::Baseline,
        }
    }

    fn task() -> TaskSpec {
        TaskSpec {
            id: "t".to_string(),
            description: "a task".to_string(),
            tools: vec![],
            max_trials: 1,
            max_steps_per_trial: 1,
        }
    }

    #[test]
    fn empty_experience_predicts_half_with_stated_rationale() {
        let p = knn_predict(
            &AgentConfig::new("a", "b", "c", "d"),
            &ExperiencePool::new(),
        );
        assert_eq!(p.value, 0.5);
        assert_eq!(p.rationale, "no experience");
        assert_eq!(p.predictor_id, PredictorId::Knn);
    }

    #[test]
    fn distance_weighted_mean_matches_hand_arithmetic() {
        // Records at hamming distance 1 (v=0.6) and 3 (v=0.2) from the
        // candidate: (0.6/2 + 0.2/4) / (1/2 + 1/4) = 0.46667.
        let candidate = AgentConfig::new("p", "r", "t", "m");
        let mut pool = ExperiencePool::new();
        pool.append(record(AgentConfig::new("p2", "r", "t", "m"), 0.6));
        pool.append(record(AgentConfig::new("p2", "r2", "t2", "m"), 0.2));
        let p = knn_predict(&candidate, &pool);
        assert!((p.value - 0.466_666_666_7).abs() < 1e-9, "got {}", p.value);
    }

    #[test]
    fn exact_match_alone_dominates() {
        let candidate = AgentConfig::new("p", "r", "t", "m");
        let mut pool = ExperiencePool::new();
        pool.append(record(candidate.clone(), 0.9));
        assert_eq!(knn_predict(&candidate, &pool).value, 0.9);
    }

    #[test]
    fn prediction_stays_in_unit_range_over_random_pools() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let names = ["a", "b", "c", "d", "e"];
        let mut pool = ExperiencePool::new();
        for _ in 0..50 {
            let agent = AgentConfig::new(
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
            );
            pool.append(record(agent, rng.gen_range(0.0..=1.0)));
        }
        for _ in 0..50 {
            let candidate = AgentConfig::new(
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
                names[rng.gen_range(0..5)],
            );
            let v = knn_predict(&candidate, &pool).value;
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn llm_predictor_parses_and_clamps() {
        let pools = seed_pools();
        let candidate = AgentConfig::new("IO", "CoT", "none", "none");
        let gw = Gateway::new(Box::new(MockBackend::new(
            vec![MockRule::simple(".*", "I estimate 1.7 roughly")],
            MockPolicy::Strict,
        )));
        let p = llm_predict(&candidate, &task(), &pools, &ExperiencePool::new(), &gw).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.predictor_id, PredictorId::Llm);
    }

    #[test]
    fn llm_predictor_without_a_number_falls_back_after_reask() {
        let pools = seed_pools();
        let candidate = AgentConfig::new("IO", "CoT", "none", "none");
        let mut pool = ExperiencePool::new();
        pool.append(record(candidate.clone(), 0.8));
        let gw = Gateway::new(Box::new(MockBackend::new(
            vec![MockRule::simple(".*", "hard to say")],
            MockPolicy::Strict,
        )));
        let p = llm_predict(&candidate, &task(), &pools, &pool, &gw).unwrap();
        assert_eq!(gw.call_count(), 2);
        assert_eq!(p.predictor_id, PredictorId::Knn);
        assert_eq!(p.value, 0.8);
        assert!(p.rationale.contains("fell back"));
    }
}
