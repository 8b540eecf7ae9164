//! Benchmark harness for the `fbtn` solver: TOML-configured problem
//! instances, FBTN and forward-backward runs with CSV traces, and named
//! invariant suites.

pub mod checks;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod instance;
pub mod run;

pub use config::{Config, Overrides, ProblemKind, SolverChoice};
pub use error::{BenchError, Result};
pub use instance::Instance;
