//! Fully Bayesian Gaussian-process surrogate of a scalar response.
//!
//! The model is `y = Hβ + f + ε` on unit-cube inputs, with a linear basis
//! `H = [1, x₁, …, x_d]`, a squared-exponential ARD kernel
//! `k(x, x') = s²·exp(−Σ_d (x_d − x'_d)² / (2ℓ_d²))` and nugget noise.
//! Posterior draws of the hyperparameters come from random-walk Metropolis;
//! see [`fit`].

mod gp;
mod linalg;
mod mcmc;

pub use gp::{
    log_integrated_likelihood, log_likelihood, predict_mean, GpHyperState, GpPredictor,
    SurrogateTrainingSet, JITTER_LADDER,
};
pub use mcmc::{
    fit, McmcSchedule, SurrogatePosterior, LENGTHSCALE_BOUNDS, MIN_NUGGET, SIGNAL_VAR_BOUNDS,
};
