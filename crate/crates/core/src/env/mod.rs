//! Evaluation environments: two scriptable text-world tasks that exercise the
//! full workflow, and an oracle landscape that scores agent configurations
//! directly for search-algorithm verification.

pub mod landscape;
pub mod lockbox;
pub mod toolchain;

pub use landscape::{config_at, synthetic_pools, LandscapeEvaluator, OracleLandscape, PairEffect};
pub use lockbox::Lockbox;
pub use toolchain::Toolchain;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::TaskSpec;

/// Outcome of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: String,
    pub feedback: String,
    pub done: bool,
    /// Action could not be parsed; state unchanged.
    pub rejected: bool,
}

/// A single-episode, single-writer environment handle.
pub trait Environment: Send {
    fn task_id(&self) -> &str;
    fn step(&mut self, action: &str) -> Result<StepOutcome>;
    /// Score in [0, 1]; fraction of goal conditions met.
    fn evaluate(&self) -> f64;
    /// Feedback text handed to replanning when a trial ends without success.
    fn trial_feedback(&self) -> String;
}

type ToolFn = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Registry of deterministic tool implementations keyed by `impl_id`.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    fns: HashMap<String, ToolFn>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with `echo` and `calculator`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register("echo", |problem| problem.to_string());
        r.register("calculator", |problem| {
            eval_arithmetic(problem)
                .map(|v| v.to_string())
                .unwrap_or_else(|| "no expression found".to_string())
        });
        r
    }

    pub fn register(
        &mut self,
        impl_id: impl Into<String>,
        f: impl Fn(&str) -> String + Send + Sync + 'static,
    ) {
        self.fns.insert(impl_id.into(), Arc::new(f));
    }

    pub fn invoke(&self, impl_id: &str, problem: &str) -> Result<String> {
        self.fns
            .get(impl_id)
            .map(|f| f(problem))
            .ok_or_else(|| Error::UnregisteredTool(impl_id.to_string()))
    }
}

/// Integer arithmetic over the first expression found in free text.
/// Supports + - * with the usual precedence.
pub fn eval_arithmetic(text: &str) -> Option<i64> {
    // Longest run of expression characters that contains a digit.
    let mut best: Option<&str> = None;
    let mut start = None;
    let bytes = text.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        let expr_char = b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'*' | b' ');
        if expr_char && start.is_none() {
            start = Some(i);
        }
        if !expr_char || i == bytes.len() - 1 {
            if let Some(s) = start.take() {
                let end = if expr_char { i + 1 } else { i };
                let candidate = text[s..end].trim();
                if candidate.bytes().any(|b| b.is_ascii_digit())
                    && candidate.len() > best.map_or(0, str::len)
                {
                    best = Some(candidate);
                }
            }
        }
    }
    let expr = best?;
    // Sum of products: terms split on +/-, factors on *.
    let mut total: i64 = 0;
    let mut term: i64 = 1;
    let mut term_open = false;
    let mut sign: i64 = 1;
    let mut num = String::new();
    let close_factor = |term: &mut i64, term_open: &mut bool, num: &mut String| -> Option<()> {
        if !num.is_empty() {
            let v: i64 = num.parse().ok()?;
            *term = if *term_open { *term * v } else { v };
            *term_open = true;
            num.clear();
        }
        Some(())
    };
    for c in expr.chars() {
        match c {
            '0'..='9' => num.push(c),
            ' ' => {}
            '*' => close_factor(&mut term, &mut term_open, &mut num)?,
            '+' | '-' => {
                close_factor(&mut term, &mut term_open, &mut num)?;
                if term_open {
                    total += sign * term;
                    term = 1;
                    term_open = false;
                }
                sign = if c == '-' { -1 } else { 1 };
            }
            _ => return None,
        }
    }
    close_factor(&mut term, &mut term_open, &mut num)?;
    if term_open {
        total += sign * term;
    }
    Some(total)
}

/// A task together with a fresh environment handle and its tool registry.
pub struct TaskInstance {
    pub task: TaskSpec,
    pub env: Box<dyn Environment>,
    pub registry: ToolRegistry,
}

/// Instantiate a built-in workflow task by id.
pub fn make_task(id: &str, seed: u64) -> Result<TaskInstance> {
    match id {
        lockbox::TASK_ID => Ok(lockbox::make(seed)),
        toolchain::TASK_ID => Ok(toolchain::make(seed)),
        _ => Err(Error::UnknownTask(id.to_string())),
    }
}

/// Ids of the built-in workflow tasks.
pub const WORKFLOW_TASK_IDS: &[&str] = &[lockbox::TASK_ID, toolchain::TASK_ID];
