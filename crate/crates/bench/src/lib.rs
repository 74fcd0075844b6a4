//! Criterion benchmarks for `fld-core`; run with `cargo bench -p fld-bench`.
