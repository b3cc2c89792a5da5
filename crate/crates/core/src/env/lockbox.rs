//! Lockbox: a three-button sequence puzzle. Pressing the right buttons in
//! order opens the box; a wrong press resets progress. The full action space
//! has four buttons, so all 4^3 = 64 three-step sequences are enumerable.

use crate::error::{Error, Result};
use crate::model::TaskSpec;

use super::{Environment, StepOutcome, TaskInstance, ToolRegistry};

pub const TASK_ID: &str = "lockbox-3";

pub const COLORS: [&str; 4] = ["red", "green", "blue", "yellow"];
pub const SECRET: [&str; 3] = ["red", "green", "blue"];

pub struct Lockbox {
    progress: usize,
    best_progress: usize,
    done: bool,
}

impl Lockbox {
    pub fn new() -> Self {
        Lockbox {
            progress: 0,
            best_progress: 0,
            done: false,
        }
    }
}

impl Default for Lockbox {
    fn default() -> Self {
        Self::new()
    }
}

fn parse_press(action: &str) -> Option<&'static str> {
    let lower = action.to_lowercase();
    if !lower.contains("press") {
        return None;
    }
    COLORS.iter().copied().find(|c| {
        lower
            .split(|ch: char| !ch.is_alphanumeric())
            .any(|tok| tok == *c)
    })
}

impl Environment for Lockbox {
    fn task_id(&self) -> &str {
        TASK_ID
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let Some(color) = parse_press(action) else {
            return Ok(StepOutcome {
                observation: "nothing happens".to_string(),
                feedback: "unknown action; say 'press <color>'".to_string(),
                done: false,
                rejected: true,
            });
        };
        if color == SECRET[self.progress] {
            self.progress += 1;
            self.best_progress = self.best_progress.max(self.progress);
            if self.progress == SECRET.len() {
                self.done = true;
                return Ok(StepOutcome {
                    observation: "a click; the box opens".to_string(),
                    feedback: String::new(),
                    done: true,
                    rejected: false,
                });
            }
            Ok(StepOutcome {
                observation: "a click".to_string(),
                feedback: String::new(),
                done: false,
                rejected: false,
            })
        } else {
            self.progress = 0;
            Ok(StepOutcome {
                observation: "a dull thud".to_string(),
                feedback: "wrong button; the lock reset".to_string(),
                done: false,
                rejected: false,
            })
        }
    }

    fn evaluate(&self) -> f64 {
        self.best_progress as f64 / SECRET.len() as f64
    }

    fn trial_feedback(&self) -> String {
        format!(
            "opened {} of {} locks; a wrong press resets the sequence",
            self.best_progress,
            SECRET.len()
        )
    }
}

pub fn make(_seed: u64) -> TaskInstance {
    TaskInstance {
        task: TaskSpec {
            id: TASK_ID.to_string(),
            description: "Open the lockbox by pressing its three buttons in the correct order. \
                          Buttons: red, green, blue, yellow. Say 'press <color>'."
                .to_string(),
            tools: vec![],
            max_trials: 3,
            max_steps_per_trial: 6,
        },
        env: Box::new(Lockbox::new()),
        registry: ToolRegistry::with_builtins(),
    }
}
