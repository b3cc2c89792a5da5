//! Toolchain: a two-goal task whose key intermediate value (the vault number)
//! is only obtainable through a tool, so agents without a tool-use module
//! cannot reach a full score.

use crate::error::{Error, Result};
use crate::model::{TaskSpec, ToolDef};

use super::{eval_arithmetic, Environment, StepOutcome, TaskInstance, ToolRegistry};

pub const TASK_ID: &str = "toolchain-2";

/// Per-seed hidden vault number in [100, 999].
pub fn vault_number(seed: u64) -> i64 {
    100 + (seed.wrapping_mul(2654435761) % 900) as i64
}

pub fn access_code(seed: u64) -> i64 {
    vault_number(seed) * 17 + 3
}

pub struct Toolchain {
    seed: u64,
    reported_vault: bool,
    submitted_code: bool,
    done: bool,
}

impl Toolchain {
    pub fn new(seed: u64) -> Self {
        Toolchain {
            seed,
            reported_vault: false,
            submitted_code: false,
            done: false,
        }
    }

    fn goals_met(&self) -> usize {
        self.reported_vault as usize + self.submitted_code as usize
    }
}

fn first_int(text: &str) -> Option<i64> {
    let re = regex::Regex::new(r"-?\d+").unwrap();
    re.find(text).and_then(|m| m.as_str().parse().ok())
}

impl Environment for Toolchain {
    fn task_id(&self) -> &str {
        TASK_ID
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let lower = action.to_lowercase();
        let number = first_int(&lower);
        let outcome = if lower.contains("report") && lower.contains("vault") {
            if number == Some(vault_number(self.seed)) {
                self.reported_vault = true;
                StepOutcome {
                    observation: format!("vault number {} confirmed", vault_number(self.seed)),
                    feedback: String::new(),
                    done: false,
                    rejected: false,
                }
            } else {
                StepOutcome {
                    observation: "the terminal beeps".to_string(),
                    feedback: "incorrect vault number".to_string(),
                    done: false,
                    rejected: false,
                }
            }
        } else if lower.contains("submit") {
            if number == Some(access_code(self.seed)) {
                self.submitted_code = true;
                StepOutcome {
                    observation: "access granted".to_string(),
                    feedback: String::new(),
                    done: false,
                    rejected: false,
                }
            } else {
                StepOutcome {
                    observation: "the terminal beeps".to_string(),
                    feedback: "incorrect access code".to_string(),
                    done: false,
                    rejected: false,
                }
            }
        } else {
            return Ok(StepOutcome {
                observation: "nothing happens".to_string(),
                feedback: "unknown action; say 'report vault <n>' or 'submit <n>'".to_string(),
                done: false,
                rejected: true,
            });
        };
        let mut outcome = outcome;
        if self.goals_met() == 2 {
            self.done = true;
            outcome.done = true;
        }
        Ok(outcome)
    }

    fn evaluate(&self) -> f64 {
        self.goals_met() as f64 / 2.0
    }

    fn trial_feedback(&self) -> String {
        format!(
            "{} of 2 goals met; the vault number must be read with a tool",
            self.goals_met()
        )
    }
}

pub fn make(seed: u64) -> TaskInstance {
    let mut registry = ToolRegistry::with_builtins();
    let vault = vault_number(seed);
    registry.register("vault_reader", move |_problem| format!("vault number {vault}"));
    registry.register("code_compiler", |problem| {
        match first_int(problem).or_else(|| eval_arithmetic(problem)) {
            Some(n) => format!("access code {}", n * 17 + 3),
            None => "no vault number given".to_string(),
        }
    });
    TaskInstance {
        task: TaskSpec {
            id: TASK_ID.to_string(),
            description: "Recover the vault access code. First find and report the vault \
                          number ('report vault <n>'), then compute and submit the access \
                          code ('submit <n>')."
                .to_string(),
            tools: vec![
                ToolDef {
                    name: "vault_reader".to_string(),
                    signature: "vault_reader() -> text".to_string(),
                    docstring: "reads the vault number plate".to_string(),
                    impl_id: "vault_reader".to_string(),
                },
                ToolDef {
                    name: "code_compiler".to_string(),
                    signature: "code_compiler(vault_number) -> text".to_string(),
                    docstring: "compiles an access code from a vault number".to_string(),
                    impl_id: "code_compiler".to_string(),
                },
            ],
            max_trials: 3,
            max_steps_per_trial: 6,
        },
        env: Box::new(Toolchain::new(seed)),
        registry,
    }
}
