//! Criterion benchmarks for `pslab`; see `benches/`.
