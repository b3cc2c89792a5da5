//! The four standardized module interfaces: plan, reason, select_tool,
//! memory_write / memory_read. Each operation is pure given its inputs plus
//! the completion provider.

mod memory;
mod planning;
mod reasoning;
mod tooluse;

pub use memory::{memory_read, memory_write};
pub use planning::plan;
#[allow(unused_imports)] // prompt recomputation is exercised by workflow tests
pub(crate) use planning::planning_prompt;
pub use reasoning::reason;
pub use tooluse::select_tool;

/// Token-set Jaccard similarity over lowercased whitespace tokens.
pub fn jaccard(a: &str, b: &str) -> f64 {
    use std::collections::BTreeSet;
    let ta: BTreeSet<String> = a.split_whitespace().map(str::to_lowercase).collect();
    let tb: BTreeSet<String> = b.split_whitespace().map(str::to_lowercase).collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}
