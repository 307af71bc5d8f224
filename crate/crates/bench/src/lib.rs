//! Criterion benchmarks for the estimator and sampling hot paths live in `benches/`.
