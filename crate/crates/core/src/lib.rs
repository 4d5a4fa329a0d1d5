//! Variational Bayesian neural networks and the tooling needed to study
//! their hyperparameters: synthetic data, uncertainty-aware metrics, Latin
//! hypercube designs, a fully Bayesian Gaussian-process surrogate, and
//! Monte Carlo Sobol sensitivity analysis on top of it.

pub mod bnn;
pub mod design;
pub mod dgm;
pub mod error;
mod fastmath;
pub mod metrics;
pub mod rng;
pub mod sensitivity;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
