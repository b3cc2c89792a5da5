//! Tool-use module interface: pick one tool from the catalog and invoke its
//! registered deterministic implementation on the problem text.

use crate::env::ToolRegistry;
use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, Gateway};
use crate::model::{ModuleKind, ModuleSpec, StrategyKind, ToolDef};
use crate::template::render;

const DEFAULT_MATCH_TEMPLATE: &str = "Choose the single best tool for the problem.\n\
Problem: {problem}\nAvailable tools:\n{tool_catalog}\nAnswer with exactly one tool name.";

const DEFAULT_RANK_TEMPLATE: &str = "Score how well each tool fits the problem.\n\
Problem: {problem}\nAvailable tools:\n{tool_catalog}\n\
Respond with one 'name: score' line per tool, scores in [0, 1].";

fn catalog(tools: &[ToolDef]) -> String {
    tools
        .iter()
        .map(|t| format!("{} | {} | {}", t.name, t.signature, t.docstring))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn select_tool<'a>(
    spec: &ModuleSpec,
    problem: &str,
    tools: &'a [ToolDef],
    registry: &ToolRegistry,
    llm: &Gateway,
) -> Result<(&'a ToolDef, String)> {
    assert_eq!(spec.kind, ModuleKind::ToolUse);
    assert!(spec.strategy != StrategyKind::None, "sentinel tool spec");
    if tools.is_empty() {
        return Err(Error::EmptyToolPool);
    }
    let catalog = catalog(tools);
    let chosen: &ToolDef = match spec.strategy {
        StrategyKind::ToolMatch => {
            let template = if spec.prompt_template.is_empty() {
                DEFAULT_MATCH_TEMPLATE
            } else {
                &spec.prompt_template
            };
            let prompt = render(template, &[("problem", problem), ("tool_catalog", &catalog)]);
            let mut named = String::new();
            let mut found = None;
            // One ask, one re-ask, then the answer is a hallucination.
            for _ in 0..2 {
                let resp = llm.complete(&CompletionRequest::new(prompt.clone()))?;
                named = resp.text.trim().to_string();
                if let Some(t) = tools.iter().find(|t| t.name == named) {
                    found = Some(t);
                    break;
                }
            }
            found.ok_or(Error::ToolHallucination { named })?
        }
        StrategyKind::ToolBruteRank => {
            let template = if spec.prompt_template.is_empty() {
                DEFAULT_RANK_TEMPLATE
            } else {
                &spec.prompt_template
            };
            let prompt = render(template, &[("problem", problem), ("tool_catalog", &catalog)]);
            let resp = llm.complete(&CompletionRequest::new(prompt))?;
            let mut scores = vec![0.0f64; tools.len()];
            for line in resp.text.lines() {
                if let Some((name, score)) = line.split_once(':') {
                    if let Some(i) = tools.iter().position(|t| t.name == name.trim()) {
                        if let Ok(v) = score.trim().parse::<f64>() {
                            scores[i] = v;
                        }
                    }
                }
            }
            // Strictly-greater comparison keeps the earliest catalog entry on ties.
            let mut best = 0usize;
            for (i, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = i;
                }
            }
            &tools[best]
        }
        other => {
            return Err(Error::InvalidSpec(format!(
                "strategy {other:?} is not a tool-use strategy"
            )))
        }
    };
    let result = registry.invoke(&chosen.impl_id, problem)?;
    Ok((chosen, result))
}
