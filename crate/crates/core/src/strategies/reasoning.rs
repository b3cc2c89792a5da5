//! Reasoning module interface. Every strategy has an exact closed-form
//! provider call count; tests assert the counts with a counting mock.

use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, Gateway};
use crate::model::{ModuleKind, ModuleSpec, StrategyKind};
use crate::template::render;

const DEFAULT_TEMPLATE: &str = "Solve the subtask.\nSubtask: {subtask}\nFeedback: {feedback}\n\
Relevant memory:\n{memory}\nTool result: {tool_result}\nAnswer:";

pub(crate) fn reasoning_prompt(
    spec: &ModuleSpec,
    subtask: &str,
    feedback: &str,
    memory_hits: &[String],
    tool_result: Option<&str>,
) -> String {
    let template = if spec.prompt_template.is_empty() {
        DEFAULT_TEMPLATE
    } else {
        &spec.prompt_template
    };
    let memory = memory_hits.join("\n");
    render(
        template,
        &[
            ("subtask", subtask),
            ("feedback", feedback),
            ("memory", &memory),
            ("tool_result", tool_result.unwrap_or("")),
        ],
    )
}

fn ask(llm: &Gateway, prompt: String) -> Result<String> {
    llm.complete(&CompletionRequest::new(prompt))
        .map(|r| r.text)
        .map_err(|e| Error::ReasoningProviderFailure(e.to_string()))
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parse the first integer in a scoring completion, clamped to 1..=len.
fn parse_choice(text: &str, len: usize) -> usize {
    let re = regex::Regex::new(r"\d+").unwrap();
    re.find(text)
        .and_then(|m| m.as_str().parse::<usize>().ok())
        .map(|n| n.clamp(1, len))
        .unwrap_or(1)
}

pub fn reason(
    spec: &ModuleSpec,
    subtask: &str,
    feedback: &str,
    memory_hits: &[String],
    tool_result: Option<&str>,
    llm: &Gateway,
) -> Result<String> {
    assert_eq!(spec.kind, ModuleKind::Reasoning);
    let base = reasoning_prompt(spec, subtask, feedback, memory_hits, tool_result);
    match spec.strategy {
        StrategyKind::SingleShot => Ok(ask(llm, base)?.trim().to_string()),
        StrategyKind::SampleAndVote => {
            let n = spec.param("sample_count", 3).max(1) as usize;
            let samples: Vec<String> = (0..n)
                .map(|_| ask(llm, base.clone()))
                .collect::<Result<_>>()?;
            // Modal answer after normalization; ties broken by first occurrence.
            let normalized: Vec<String> = samples.iter().map(|s| normalize(s)).collect();
            let winner = normalized
                .iter()
                .enumerate()
                .max_by_key(|(i, form)| {
                    let count = normalized.iter().filter(|f| f == form).count();
                    // Earlier first occurrence wins ties.
                    (count, std::cmp::Reverse(*i))
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            Ok(samples[winner].trim().to_string())
        }
        StrategyKind::TreeSearch => {
            let breadth = spec.param("tree_breadth", 2).max(1) as usize;
            let depth = spec.param("tree_depth", 2).max(1) as usize;
            let mut frontier: Vec<String> = vec![String::new()];
            let mut selected = 0usize;
            for _level in 0..depth {
                let mut next = Vec::with_capacity(frontier.len() * breadth);
                for node in &frontier {
                    for _ in 0..breadth {
                        let prompt = if node.is_empty() {
                            format!("{base}\nPropose one candidate thought.")
                        } else {
                            format!("{base}\nPartial thought:\n{node}\nExtend it by one step.")
                        };
                        next.push(ask(llm, prompt)?);
                    }
                }
                let listing = next
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("{}. {}", i + 1, t.trim()))
                    .collect::<Vec<_>>()
                    .join("\n");
                let verdict = ask(
                    llm,
                    format!("{base}\nCandidates:\n{listing}\nAnswer with the number of the best candidate."),
                )?;
                selected = parse_choice(&verdict, next.len()) - 1;
                frontier = next;
            }
            Ok(frontier[selected].trim().to_string())
        }
        StrategyKind::SelfRefine => {
            let rounds = spec.param("refine_rounds", 1).max(0) as usize;
            let mut answer = ask(llm, base.clone())?;
            for _ in 0..rounds {
                answer = ask(
                    llm,
                    format!(
                        "{base}\nPrevious answer:\n{answer}\nCritique the previous answer and give an improved final answer."
                    ),
                )?;
            }
            Ok(answer.trim().to_string())
        }
        StrategyKind::StepBack => {
            let principle = ask(
                llm,
                format!("{base}\nFirst, state the general principle behind this subtask."),
            )?;
            let answer = ask(
                llm,
                format!("{base}\nPrinciple: {principle}\nNow give the final answer."),
            )?;
            Ok(answer.trim().to_string())
        }
        other => Err(Error::InvalidSpec(format!(
            "strategy {other:?} is not a reasoning strategy"
        ))),
    }
}
