//! Orchestration for BNN hyperparameter sensitivity studies: Latin
//! hypercube designs, resumable sharded sweeps, merging, surrogate-based
//! sensitivity analysis and plots.

pub mod analyze;
pub mod cli;
pub mod config;
pub mod error;
pub mod merge;
pub mod plot;
pub mod replicate;
pub mod results;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
