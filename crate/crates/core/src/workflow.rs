//! Workflow engine: runs one assembled agent against an environment through
//! the iterative plan / reason / act / feedback loop until success or the
//! trial budget runs out.

use crate::env::{Environment, ToolRegistry};
use crate::error::Result;
use crate::gateway::Gateway;
use crate::model::{
    AgentConfig, ModulePools, Phase, StrategyKind, TaskSpec, Trajectory, TrajectoryStep,
    MemoryStore,
};
use crate::strategies::{memory_read, memory_write, plan, reason, select_tool};

/// Directive token a reasoning module emits to request tool support.
pub const TOOL_DIRECTIVE: &str = "TOOL:";

struct StepLog<'a> {
    llm: &'a Gateway,
    steps: Vec<TrajectoryStep>,
}

impl<'a> StepLog<'a> {
    fn new(llm: &'a Gateway) -> Self {
        StepLog {
            llm,
            steps: Vec::new(),
        }
    }

    /// Record a step backed by LLM calls made since `from`; digests come from
    /// the first prompt and last completion of the span.
    fn llm_step(&mut self, from: usize, phase: Phase, action: &str, feedback: &str) {
        let calls = self.llm.calls_since(from);
        let (prompt_digest, completion_digest) = match (calls.first(), calls.last()) {
            (Some(first), Some(last)) => (
                first.prompt_digest.clone(),
                last.completion_digest.clone(),
            ),
            _ => (String::new(), String::new()),
        };
        self.steps.push(TrajectoryStep {
            phase,
            prompt_digest,
            completion_digest,
            action_text: action.to_string(),
            feedback_text: feedback.to_string(),
            tokens_in: calls.iter().map(|c| c.tokens_in).sum(),
            tokens_out: calls.iter().map(|c| c.tokens_out).sum(),
        });
    }

    fn local_step(&mut self, phase: Phase, action: &str, feedback: &str) {
        self.steps.push(TrajectoryStep {
            phase,
            prompt_digest: String::new(),
            completion_digest: String::new(),
            action_text: action.to_string(),
            feedback_text: feedback.to_string(),
            tokens_in: 0,
            tokens_out: 0,
        });
    }
}

/// Execute one episode. Provider failures abort the current trial, not the
/// episode; the final score always comes from `env.evaluate()`.
pub fn run_episode(
    agent: &AgentConfig,
    pools: &ModulePools,
    task: &TaskSpec,
    env: &mut dyn Environment,
    registry: &ToolRegistry,
    llm: &Gateway,
) -> Result<Trajectory> {
    pools.validate_config(agent)?;
    let [plan_spec, reason_spec, tool_spec, mem_spec] = pools.resolve(agent)?;
    let has_memory = mem_spec.strategy != StrategyKind::None;
    let has_tool = tool_spec.strategy != StrategyKind::None;

    let mut log = StepLog::new(llm);
    let mut store = MemoryStore::new();
    let mut feedback = String::new();
    let mut action_counter = 0usize;

    'trials: for _trial in 0..task.max_trials {
        let from = llm.call_count();
        let plan = match plan(plan_spec, task, &feedback, llm) {
            Ok(p) => {
                log.llm_step(from, Phase::Plan, &format!("{} subtasks", p.len()), "");
                p
            }
            Err(e) => {
                log.llm_step(from, Phase::Plan, "", &e.to_string());
                feedback = format!("planning failed: {e}");
                continue 'trials;
            }
        };

        let mut actions_this_trial = 0usize;
        for subtask in plan.subtasks() {
            if actions_this_trial >= task.max_steps_per_trial {
                feedback = format!("step budget exhausted; {}", env.trial_feedback());
                continue 'trials;
            }
            let memory_hits = if has_memory {
                let hits = memory_read(mem_spec, &store, subtask);
                log.local_step(
                    Phase::MemoryRead,
                    subtask,
                    &format!("{} hits", hits.len()),
                );
                hits
            } else {
                Vec::new()
            };

            let from = llm.call_count();
            let mut solution =
                match reason(reason_spec, subtask, &feedback, &memory_hits, None, llm) {
                    Ok(s) => {
                        log.llm_step(from, Phase::Reason, &s, "");
                        s
                    }
                    Err(e) => {
                        log.llm_step(from, Phase::Reason, "", &e.to_string());
                        feedback = format!("reasoning failed: {e}");
                        continue 'trials;
                    }
                };

            if has_tool {
                if let Some(pos) = solution.find(TOOL_DIRECTIVE) {
                    let problem = solution[pos + TOOL_DIRECTIVE.len()..].trim().to_string();
                    let from = llm.call_count();
                    match select_tool(tool_spec, &problem, &task.tools, registry, llm) {
                        Ok((tool, result)) => {
                            log.llm_step(from, Phase::Tool, &tool.name, &result);
                            let from = llm.call_count();
                            // One re-reason with the tool result, not a loop.
                            match reason(
                                reason_spec,
                                subtask,
                                &feedback,
                                &memory_hits,
                                Some(&result),
                                llm,
                            ) {
                                Ok(s) => {
                                    log.llm_step(from, Phase::Reason, &s, "");
                                    solution = s;
                                }
                                Err(e) => {
                                    log.llm_step(from, Phase::Reason, "", &e.to_string());
                                    feedback = format!("reasoning failed: {e}");
                                    continue 'trials;
                                }
                            }
                        }
                        Err(e) => {
                            log.llm_step(from, Phase::Tool, &problem, &e.to_string());
                            feedback = format!("tool use failed: {e}");
                            continue 'trials;
                        }
                    }
                }
            }

            let outcome = env.step(&solution)?;
            actions_this_trial += 1;
            action_counter += 1;
            log.local_step(
                Phase::EnvAct,
                &solution,
                &if outcome.feedback.is_empty() {
                    outcome.observation.clone()
                } else {
                    format!("{}; {}", outcome.observation, outcome.feedback)
                },
            );

            if has_memory {
                memory_write(mem_spec, &mut store, &outcome.observation, action_counter);
                log.local_step(Phase::MemoryWrite, &outcome.observation, "");
            }

            if outcome.done {
                break 'trials;
            }
            if outcome.rejected {
                feedback = outcome.feedback;
                continue 'trials;
            }
        }
        feedback = env.trial_feedback();
    }

    Ok(Trajectory {
        task_id: task.id.clone(),
        agent: agent.clone(),
        steps: log.steps,
        final_score: env.evaluate(),
    })
}

/// Serialize a trajectory as JSONL: a header line with agent/task metadata
/// followed by one step per line.
pub fn trajectory_to_jsonl(t: &Trajectory) -> String {
    let header = serde_json::json!({
        "task_id": t.task_id,
        "agent": t.agent,
        "final_score": t.final_score,
        "tokens_in": t.tokens_in(),
        "tokens_out": t.tokens_out(),
        "steps": t.steps.len(),
    });
    let mut out = header.to_string();
    out.push('\n');
    for step in &t.steps {
        out.push_str(&serde_json::to_string(step).expect("step serializes"));
        out.push('\n');
    }
    out
}

/// Parse a trajectory from its JSONL form.
pub fn trajectory_from_jsonl(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: serde_json::Value = serde_json::from_str(lines.next().ok_or_else(|| {
        crate::error::Error::InvalidConfig("empty trajectory file".to_string())
    })?)?;
    let steps = lines
        .map(serde_json::from_str::<TrajectoryStep>)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        task_id: header["task_id"].as_str().unwrap_or_default().to_string(),
        agent: serde_json::from_value(header["agent"].clone())?,
        steps,
        final_score: header["final_score"].as_f64().unwrap_or(0.0),
    })
}
