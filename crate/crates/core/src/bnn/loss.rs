use std::f64::consts::PI;

use super::config::{HyperConfig, Objective};
use super::network::{ColumnInputs, NetScratch};
use super::posterior::{gaussian_kl, NoiseDraws, VariationalPosterior};
use crate::dgm::StandardizedDataset;
use crate::error::{config, Result};
use crate::stats::log_mean_exp;

/// Gradient of a loss with respect to the variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub means: Vec<f64>,
    pub log_sds: Vec<f64>,
}

impl Gradient {
    pub fn is_finite(&self) -> bool {
        self.means
            .iter()
            .chain(&self.log_sds)
            .all(|g| g.is_finite())
    }
}

/// Reusable buffers for loss evaluation.
pub(crate) struct Workspace {
    inputs: ColumnInputs,
    net: NetScratch,
    sds: Vec<f64>,
    theta: Vec<f64>,
    /// Per-draw `∂nll/∂θ`, row-major `k × p`.
    grad_theta: Vec<f64>,
    thetas: Vec<f64>,
    nll: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(data: &StandardizedDataset, p: usize, k: usize) -> Self {
        Self {
            inputs: ColumnInputs::from_rows(&data.train_inputs, data.input_dim),
            net: NetScratch::default(),
            sds: vec![0.0; p],
            theta: vec![0.0; p],
            grad_theta: vec![0.0; k * p],
            thetas: vec![0.0; k * p],
            nll: vec![0.0; k],
        }
    }

    /// Per-draw network likelihood terms and their θ-gradients.
    fn run_draws(
        &mut self,
        q: &VariationalPosterior,
        data: &StandardizedDataset,
        noise: &NoiseDraws,
    ) {
        let p = q.param_count();
        let k = noise.k;
        if self.grad_theta.len() != k * p {
            self.grad_theta.resize(k * p, 0.0);
            self.thetas.resize(k * p, 0.0);
            self.nll.resize(k, 0.0);
        }
        for (s, l) in q.log_sds.iter().zip(self.sds.iter_mut()) {
            *l = s.exp();
        }
        for s in 0..k {
            q.transform_into(noise.draw(s), &self.sds, &mut self.theta);
            self.thetas[s * p..(s + 1) * p].copy_from_slice(&self.theta);
            self.nll[s] = q.shape.nll_and_grad(
                &self.theta,
                &self.inputs,
                &data.train_responses,
                data.std_noise_var,
                &mut self.grad_theta[s * p..(s + 1) * p],
                &mut self.net,
            );
        }
    }
}

/// Loss value and gradient for a fixed set of noise draws.
pub(crate) fn evaluate(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    objective: Objective,
    prior_mean: f64,
    prior_sd: f64,
    noise: &NoiseDraws,
    ws: &mut Workspace,
    grad: &mut Gradient,
) -> f64 {
    ws.run_draws(q, data, noise);
    let p = q.param_count();
    let k = noise.k;
    let prior_var = prior_sd * prior_sd;
    match objective {
        Objective::Kl { gamma } => {
            let inv_k = 1.0 / k as f64;
            let mean_nll = ws.nll.iter().sum::<f64>() * inv_k;
            for i in 0..p {
                let mut gm = 0.0;
                let mut gl = 0.0;
                for s in 0..k {
                    let g = ws.grad_theta[s * p + i];
                    gm += g;
                    gl += g * noise.eps[s * p + i];
                }
                let sd = ws.sds[i];
                grad.means[i] = gm * inv_k + gamma * (q.means[i] - prior_mean) / prior_var;
                grad.log_sds[i] = gl * inv_k * sd + gamma * (sd * sd / prior_var - 1.0);
            }
            mean_nll + gamma * gaussian_kl(q, prior_mean, prior_sd)
        }
        Objective::AlphaRenyi { alpha } => {
            let one_minus = 1.0 - alpha;
            let half_ln_2pi = 0.5 * (2.0 * PI).ln();
            let ln_prior_sd = prior_sd.ln();
            let sum_log_sds: f64 = q.log_sds.iter().sum();
            let mut scaled = vec![0.0; k];
            for s in 0..k {
                let theta = &ws.thetas[s * p..(s + 1) * p];
                let eps = noise.draw(s);
                let mut log_prior = 0.0;
                let mut eps_sq = 0.0;
                for i in 0..p {
                    let d = theta[i] - prior_mean;
                    log_prior -= d * d;
                    eps_sq += eps[i] * eps[i];
                }
                log_prior = log_prior / (2.0 * prior_var) - p as f64 * (half_ln_2pi + ln_prior_sd);
                let log_q = -(p as f64) * half_ln_2pi - sum_log_sds - 0.5 * eps_sq;
                let w = -ws.nll[s] + log_prior - log_q;
                scaled[s] = one_minus * w;
            }
            let lme = log_mean_exp(&scaled);
            let value = -lme / one_minus;
            // Self-normalized importance weights of the draws.
            let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut weights: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            for i in 0..p {
                let sd = ws.sds[i];
                let mut gm = 0.0;
                let mut gl = 0.0;
                for s in 0..k {
                    // ∂w_s/∂θ through the likelihood and the prior
                    let dw =
                        -ws.grad_theta[s * p + i] - (ws.thetas[s * p + i] - prior_mean) / prior_var;
                    gm += weights[s] * dw;
                    gl += weights[s] * (dw * sd * noise.eps[s * p + i] + 1.0);
                }
                grad.means[i] = -gm;
                grad.log_sds[i] = -gl;
            }
            value
        }
    }
}

fn eval_with_seed(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    objective: Objective,
    cfg: &HyperConfig,
    seed: u64,
) -> (f64, Gradient) {
    let p = q.param_count();
    let noise = NoiseDraws::from_seed(cfg.mc_samples, p, seed);
    let mut ws = Workspace::new(data, p, cfg.mc_samples);
    let mut grad = Gradient {
        means: vec![0.0; p],
        log_sds: vec![0.0; p],
    };
    let v = evaluate(
        q,
        data,
        objective,
        cfg.prior_mean,
        cfg.prior_sd,
        &noise,
        &mut ws,
        &mut grad,
    );
    (v, grad)
}

/// Monte Carlo estimate of `−E_q[Σᵢ log N(yᵢ | g(xᵢ,θ), σ²)]` over `k` draws.
pub fn nll_expectation(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    k: usize,
    seed: u64,
) -> f64 {
    let p = q.param_count();
    let noise = NoiseDraws::from_seed(k, p, seed);
    let mut ws = Workspace::new(data, p, k);
    ws.run_draws(q, data, &noise);
    ws.nll.iter().sum::<f64>() / k as f64
}

/// KL objective `nll_expectation + γ·KL(q ‖ prior)` with `config.mc_samples` draws.
pub fn loss_kl(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
) -> Result<f64> {
    match cfg.objective {
        Objective::Kl { gamma } => {
            Ok(eval_with_seed(q, data, Objective::Kl { gamma }, cfg, seed).0)
        }
        _ => Err(config("loss_kl requires the KL divergence")),
    }
}

/// Monte Carlo variational Rényi objective for `α ∈ [0, 1)`.
pub fn loss_renyi(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
) -> Result<f64> {
    match cfg.objective {
        Objective::AlphaRenyi { alpha } if (0.0..1.0).contains(&alpha) => {
            Ok(eval_with_seed(q, data, cfg.objective, cfg, seed).0)
        }
        Objective::AlphaRenyi { alpha } => Err(config(format!(
            "Renyi bound needs alpha in [0, 1), got {alpha}"
        ))),
        _ => Err(config("loss_renyi requires the alpha-Renyi divergence")),
    }
}

/// Value and gradient of the objective `cfg` selects (after routing `α = 1`
/// to unit-weight KL).
pub fn loss_and_gradient(
    q: &VariationalPosterior,
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
) -> Result<(f64, Gradient)> {
    cfg.validate()?;
    Ok(eval_with_seed(
        q,
        data,
        cfg.effective_objective(),
        cfg,
        seed,
    ))
}
