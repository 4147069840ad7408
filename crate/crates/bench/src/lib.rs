//! Criterion benchmarks for the analytics engine live in `benches/`.
