//! Bench-only crate; see benches/search_benches.rs.
