//! Experiment harness for the `irsmec` library: channel generation,
//! feasibility traces and probabilities, and earning optimization runs,
//! all written as CSV with a manifest per run.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
