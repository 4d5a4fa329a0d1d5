//! Mean-field variational Bayesian neural networks.
//!
//! The network is a two-layer tanh perceptron `g(x, θ) = w₂·tanh(W₁x + b₁) + b₂`
//! with a fully factorized Gaussian posterior `q(θ) = Πᵢ N(μ̂ᵢ, σ̂ᵢ²)` and an
//! isotropic Gaussian prior `N(μ₀, σ₀²)` on every weight and bias. The
//! observation noise variance is known.
//!
//! Two objectives are available, both estimated with reparameterized Monte
//! Carlo draws `θ = μ̂ + σ̂ ⊙ ε`:
//!
//! * [`loss_kl`]: `−E_q[log p(y|x,θ)] + γ·KL(q ‖ p)` with the KL term in
//!   closed form.
//! * [`loss_renyi`]: the variational Rényi bound
//!   `−1/(1−α) · log mean_s exp((1−α)·w_s)` with
//!   `w_s = log p(y|x,θ_s) + log p(θ_s) − log q(θ_s)`.

mod config;
mod loss;
mod network;
mod posterior;
mod predictive;
mod train;

pub use config::{Divergence, HyperConfig, Objective};
pub use loss::{loss_and_gradient, loss_kl, loss_renyi, nll_expectation, Gradient};
pub use network::NetworkShape;
pub use posterior::{
    gaussian_kl, init_posterior, reparam_sample, NoiseDraws, VariationalPosterior,
};
pub use predictive::{
    posterior_predictive, PredictiveSummary, DEFAULT_LEVEL, DEFAULT_PREDICTIVE_DRAWS,
};
pub use train::{step_scale, train, train_traced, write_trace_csv};
