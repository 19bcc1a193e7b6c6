//! Criterion benchmarks for pmt-core live under `benches/`.
