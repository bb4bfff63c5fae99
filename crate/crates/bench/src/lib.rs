//! Criterion benchmarks for the lattice step, the stochastic kernel and the
//! analysis routines. Run with `cargo bench -p sobtc-bench`.
