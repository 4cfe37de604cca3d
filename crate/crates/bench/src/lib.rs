//! Criterion benchmarks for the walk engine; see `benches/`.
