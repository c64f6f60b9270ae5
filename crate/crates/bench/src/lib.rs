//! Criterion micro-benchmarks for the `metric-svm` solvers.
//!
//! Run with `cargo bench -p metric-svm-bench`. The benchmark targets live
//! under `benches/`; this crate intentionally exports nothing.
