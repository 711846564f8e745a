//! Criterion benchmarks for kernelforge; see `benches/`.
