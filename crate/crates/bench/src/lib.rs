//! Criterion benchmarks for the hot paths of `grusin-core`; see `benches/`.
