use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Statistical distance minimized during variational fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Divergence {
    Kl,
    AlphaRenyi,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Divergence::Kl => "kl",
            Divergence::AlphaRenyi => "renyi",
        })
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(Divergence::Kl),
            "renyi" | "alpha-renyi" | "alpharenyi" | "ar" => Ok(Divergence::AlphaRenyi),
            other => Err(config(format!("unknown divergence `{other}`"))),
        }
    }
}

/// The divergence-specific hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// KL objective with prior reweighting `γ > 0`.
    Kl { gamma: f64 },
    /// Rényi objective with `α ∈ [0, 1]`; `α = 1` is served by the KL
    /// objective with `γ = 1`.
    AlphaRenyi { alpha: f64 },
}

/// One point of the hyperparameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    pub objective: Objective,
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub optimizer_steps: usize,
    pub nn_features: usize,
    pub mc_samples: usize,
    pub learning_rate: f64,
}

impl HyperConfig {
    pub fn divergence(&self) -> Divergence {
        match self.objective {
            Objective::Kl { .. } => Divergence::Kl,
            Objective::AlphaRenyi { .. } => Divergence::AlphaRenyi,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.objective {
            Objective::Kl { gamma } => Some(gamma),
            Objective::AlphaRenyi { .. } => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.objective {
            Objective::AlphaRenyi { alpha } => Some(alpha),
            Objective::Kl { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.objective {
            Objective::Kl { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                return Err(config(format!("gamma must be positive, got {gamma}")))
            }
            Objective::AlphaRenyi { alpha } if !(0.0..=1.0).contains(&alpha) => {
                return Err(config(format!("alpha must lie in [0, 1], got {alpha}")))
            }
            _ => {}
        }
        if !(self.prior_sd > 0.0 && self.prior_sd.is_finite()) {
            return Err(config(format!(
                "prior_sd must be positive, got {}",
                self.prior_sd
            )));
        }
        if !self.prior_mean.is_finite() {
            return Err(config("prior_mean must be finite"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.nn_features == 0 {
            return Err(config("nn_features must be at least 1"));
        }
        if self.mc_samples == 0 {
            return Err(config("mc_samples must be at least 1"));
        }
        Ok(())
    }

    /// Objective actually optimized. A Rényi request at exactly `α = 1`
    /// is undefined for the Rényi bound and is routed to KL with `γ = 1`.
    pub fn effective_objective(&self) -> Objective {
        match self.objective {
            Objective::AlphaRenyi { alpha } if alpha >= 1.0 => {
                log::warn!(
                    "alpha = {alpha} is outside [0, 1); using the KL objective with gamma = 1"
                );
                Objective::Kl { gamma: 1.0 }
            }
            other => other,
        }
    }
}
