//! Weight-coded evolutionary algorithms for the 0-1 multidimensional
//! knapsack problem.
//!
//! Two algorithm modes share one steady-state engine:
//!
//! * **WCEA** — log-normal weight biasing, surrogate pseudo-utility
//!   decoding driven by LP-relaxation shadow prices, random
//!   initialization.
//! * **IWCEA** — uniform weight biasing on `[0, p_max/p_j]`, decoding by
//!   biased profit directly, and an initial population seeded from
//!   hyperplane-constrained LP relaxations.
//!
//! The crate also ships the supporting pieces: an OR-Library instance
//! parser and generator, a dense bounded-variable simplex with dual
//! extraction, a brute-force oracle for small instances, and a benchmark
//! harness with gap statistics and CSV output.

// tableau and constraint-matrix code walks several parallel arrays by
// index; iterator chains obscure that
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod coding;
pub mod ea;
pub mod init;
pub mod instance;
pub mod lp;
