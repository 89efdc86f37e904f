//! Criterion benchmarks for `cgwish-core`; see `benches/`.
