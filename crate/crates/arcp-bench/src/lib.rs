//! Benchmark-only crate; see `benches/arcp_benches.rs`.
