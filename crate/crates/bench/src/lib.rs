//! Criterion benchmarks for the solvers, prox operators and MEG operators.
//! Run with `cargo bench -p cgist-bench`.
