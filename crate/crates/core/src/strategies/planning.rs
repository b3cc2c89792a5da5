//! Planning module interface: task description plus feedback in, ordered
//! subtask list out.

use crate::error::{Error, Result};
use crate::gateway::{CompletionRequest, Gateway};
use crate::model::{ModuleKind, ModuleSpec, StrategyKind, SubTaskPlan, TaskSpec};
use crate::template::render;

const DEFAULT_TEMPLATE: &str = "Decompose the task into a short numbered list of subtasks.\n\
Task: {task}\nFeedback: {feedback}\nRespond with a numbered list only.";

fn parse_numbered_list(text: &str) -> Option<Vec<String>> {
    let re = regex::Regex::new(r"^\s*\d+[.)]\s*(.+)$").unwrap();
    let items: Vec<String> = text
        .lines()
        .filter_map(|line| re.captures(line).map(|c| c[1].trim().to_string()))
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        None
    } else {
        Some(items)
    }
}

/// Render the planning prompt exactly as `plan` would issue it. Exposed so
/// replay checks can recompute prompt digests.
pub(crate) fn planning_prompt(spec: &ModuleSpec, task: &TaskSpec, feedback: &str) -> String {
    let template = if spec.prompt_template.is_empty() {
        DEFAULT_TEMPLATE
    } else {
        &spec.prompt_template
    };
    render(
        template,
        &[("task", &task.description), ("feedback", feedback)],
    )
}

pub fn plan(
    spec: &ModuleSpec,
    task: &TaskSpec,
    feedback: &str,
    llm: &Gateway,
) -> Result<SubTaskPlan> {
    assert_eq!(spec.kind, ModuleKind::Planning);
    if spec.strategy == StrategyKind::None {
        return SubTaskPlan::new(vec![task.description.clone()]);
    }
    let prompt = planning_prompt(spec, task, feedback);
    let mut raw = String::new();
    // Initial ask plus two re-asks before giving up.
    for _ in 0..3 {
        let resp = llm.complete(&CompletionRequest::new(prompt.clone()))?;
        if let Some(items) = parse_numbered_list(&resp.text) {
            return SubTaskPlan::new(items);
        }
        raw = resp.text;
    }
    Err(Error::PlanParseFailure { raw })
}
