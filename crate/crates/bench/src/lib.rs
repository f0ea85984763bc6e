//! Benchmark-only crate; the benches live under `benches/`.
