//! Benchmarks for the classification, reduction, integration and residual paths live in `benches/`.
