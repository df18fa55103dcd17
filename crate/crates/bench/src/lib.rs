//! Benchmark-only crate; see `benches/samplers.rs`.
