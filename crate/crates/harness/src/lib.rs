//! Experiment runner for the unitary-symmetric BD-RIS optimizer.
//!
//! A [`RunSpec`] (flat TOML) describes a scenario, a sweep over the number of
//! BD-RIS elements, a trial count and the methods to compare. [`run_experiment`]
//! produces per-trial rows, convergence traces and a per-method summary;
//! [`bench`] times the optimizer loops.

pub mod bench;
pub mod experiment;
pub mod runspec;

pub use bench::{bench, bench_csv, write_bench, BenchRow};
pub use experiment::{run_experiment, ExperimentOutput, ResultRow};
pub use runspec::{Method, RunSpec};
