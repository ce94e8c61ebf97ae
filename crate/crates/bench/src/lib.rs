//! Criterion benchmarks for the bubbletree core; run with `cargo bench -p bubbletree-bench`.
