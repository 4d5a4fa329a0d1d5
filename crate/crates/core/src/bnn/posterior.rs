use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::HyperConfig;
use super::network::NetworkShape;
use crate::error::Result;
use crate::rng::{fill_standard_normal, rng_from_seed};

/// Standard deviation of the initial posterior means around zero.
const INIT_MEAN_SD: f64 = 0.1;
/// Initial posterior standard deviation of every weight.
const INIT_SD: f64 = 0.05;

/// Fully factorized Gaussian `q(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalPosterior {
    pub shape: NetworkShape,
    pub means: Vec<f64>,
    pub log_sds: Vec<f64>,
}

impl VariationalPosterior {
    /// Means `~ N(0, 0.1²)`, standard deviations `0.05`.
    pub fn init(shape: NetworkShape, seed: u64) -> Self {
        let p = shape.param_count();
        let mut means = vec![0.0; p];
        fill_standard_normal(&mut rng_from_seed(seed), &mut means);
        means.iter_mut().for_each(|m| *m *= INIT_MEAN_SD);
        Self {
            shape,
            means,
            log_sds: vec![INIT_SD.ln(); p],
        }
    }

    pub fn param_count(&self) -> usize {
        self.means.len()
    }

    /// Number of optimized scalars (a mean and a log-sd per weight).
    pub fn optimizable_count(&self) -> usize {
        2 * self.means.len()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.log_sds.iter().map(|l| l.exp()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.means.iter().all(|m| m.is_finite()) && self.log_sds.iter().all(|l| l.is_finite())
    }

    /// `θ = μ̂ + σ̂ ⊙ ε` for one noise vector.
    pub(crate) fn transform_into(&self, eps: &[f64], sds: &[f64], theta: &mut [f64]) {
        for i in 0..theta.len() {
            theta[i] = self.means[i] + sds[i] * eps[i];
        }
    }

    /// Write `index,mean,log_sd` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,mean,log_sd")?;
        for (i, (m, l)) in self.means.iter().zip(&self.log_sds).enumerate() {
            writeln!(out, "{i},{m},{l}")?;
        }
        Ok(())
    }
}

/// Validate `config` and initialize the posterior for `shape`.
pub fn init_posterior(
    shape: NetworkShape,
    config: &HyperConfig,
    seed: u64,
) -> Result<VariationalPosterior> {
    config.validate()?;
    Ok(VariationalPosterior::init(shape, seed))
}

/// `k` standard normal vectors of length `p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraws {
    pub k: usize,
    pub p: usize,
    pub eps: Vec<f64>,
}

impl NoiseDraws {
    pub fn from_seed(k: usize, p: usize, seed: u64) -> Self {
        let mut eps = vec![0.0; k * p];
        fill_standard_normal(&mut rng_from_seed(seed), &mut eps);
        Self { k, p, eps }
    }

    pub fn draw(&self, s: usize) -> &[f64] {
        &self.eps[s * self.p..(s + 1) * self.p]
    }
}

/// `k` reparameterized weight vectors. The same seed yields the same noise
/// as the loss functions use, so samples line up with loss evaluations.
pub fn reparam_sample(q: &VariationalPosterior, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let p = q.param_count();
    let noise = NoiseDraws::from_seed(k, p, seed);
    let sds = q.sds();
    (0..k)
        .map(|s| {
            let mut theta = vec![0.0; p];
            q.transform_into(noise.draw(s), &sds, &mut theta);
            theta
        })
        .collect()
}

/// Closed-form `KL(q ‖ N(μ₀, σ₀²)^⊗p)`.
pub fn gaussian_kl(q: &VariationalPosterior, prior_mean: f64, prior_sd: f64) -> f64 {
    let prior_var = prior_sd * prior_sd;
    let ln_prior_sd = prior_sd.ln();
    q.means
        .iter()
        .zip(&q.log_sds)
        .map(|(&m, &l)| {
            let var = (2.0 * l).exp();
            let dm = m - prior_mean;
            ln_prior_sd - l + (var + dm * dm) / (2.0 * prior_var) - 0.5
        })
        .sum()
}
