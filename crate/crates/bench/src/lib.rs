//! Criterion benchmarks for splatprune live in `benches/`; run them with
//! `cargo bench -p splatprune-bench`.
