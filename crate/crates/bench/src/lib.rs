//! Criterion benchmarks for the mini-SPACE pipeline live in `benches/`.
