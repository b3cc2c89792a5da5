//! Run artifact writers: result.json (run metadata), trajectory.csv (one row
//! per iteration), experience.jsonl (records appended by the run), and
//! pools.json (module spec snapshot).

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ExperienceRecord, ModulePools};
use crate::search::SearchResult;
use crate::store::write_pools_snapshot;

pub const RESULT_FILE: &str = "result.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EXPERIENCE_FILE: &str = "experience.jsonl";
pub const POOLS_FILE: &str = "pools.json";

/// Canonical CSV rendering of the convergence trajectory.
pub fn trajectory_csv(result: &SearchResult) -> String {
    let mut out = String::from("iteration,phase,best_so_far,real_evals_cum,tokens_cum\n");
    for row in &result.iterations {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.iteration, row.phase, row.best_so_far, row.real_evals_cum, row.tokens_cum
        ));
    }
    out
}

pub fn experience_jsonl(records: &[ExperienceRecord]) -> Result<String> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    Ok(out)
}

/// Write all artifacts for one finished run into `dir` (created if absent).
pub fn write_run_artifacts(
    dir: &Path,
    result: &SearchResult,
    new_records: &[ExperienceRecord],
    pools: &ModulePools,
) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|_| Error::StoreUnavailable(dir.display().to_string()))?;
    std::fs::write(
        dir.join(RESULT_FILE),
        serde_json::to_string_pretty(result)?,
    )?;
    std::fs::write(dir.join(TRAJECTORY_FILE), trajectory_csv(result))?;
    std::fs::write(dir.join(EXPERIENCE_FILE), experience_jsonl(new_records)?)?;
    write_pools_snapshot(&dir.join(POOLS_FILE), pools)?;
    Ok(())
}

/// Parse a trajectory.csv back into rows (used by the report command).
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<crate::search::IterationRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::InvalidConfig(format!(
                "trajectory csv line {}: expected 5 fields, got {}",
                i + 1,
                parts.len()
            )));
        }
        let parse_err = |field: &str| {
            Error::InvalidConfig(format!("trajectory csv line {}: bad {field}", i + 1))
        };
        rows.push(crate::search::IterationRow {
            iteration: parts[0].parse().map_err(|_| parse_err("iteration"))?,
            phase: parts[1].to_string(),
            best_so_far: parts[2].parse().map_err(|_| parse_err("best_so_far"))?,
            real_evals_cum: parts[3].parse().map_err(|_| parse_err("real_evals_cum"))?,
            tokens_cum: parts[4].parse().map_err(|_| parse_err("tokens_cum"))?,
        });
    }
    Ok(rows)
}
