use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gp::{integrated, GpHyperState, Integrated, SurrogateTrainingSet};
use super::linalg::solve_upper_t;
use crate::error::{config, Result};
use crate::rng::{rng_from_seed, Rng};

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-2, 1e2);
pub const SIGNAL_VAR_BOUNDS: (f64, f64) = (1e-4, 1e2);
pub const MIN_NUGGET: f64 = 1e-6;
const TARGET_ACCEPTANCE: f64 = 0.25;
const ADAPT_EVERY: usize = 25;

/// Burn-in, total iterations and thinning of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcSchedule {
    pub burn: usize,
    pub total: usize,
    pub thin: usize,
}

impl Default for McmcSchedule {
    fn default() -> Self {
        Self {
            burn: 500,
            total: 5000,
            thin: 10,
        }
    }
}

impl McmcSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.burn >= self.total {
            return Err(config(format!(
                "MCMC schedule needs thin ≥ 1 and burn < total, got ({}, {}, {})",
                self.burn, self.total, self.thin
            )));
        }
        Ok(())
    }

    pub fn draw_count(&self) -> usize {
        (self.total - self.burn) / self.thin
    }
}

/// Retained posterior draws of the surrogate hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePosterior {
    pub draws: Vec<GpHyperState>,
    pub train: SurrogateTrainingSet,
    pub schedule: McmcSchedule,
    pub seed: u64,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    /// Final random-walk step scale on the log parameters.
    pub proposal_scale: f64,
}

/// Log posterior of `φ = (log ℓ₁, …, log ℓ_d, log s², log ν)`.
/// Lengthscales and the signal variance are log-uniform on
/// [`LENGTHSCALE_BOUNDS`] and [`SIGNAL_VAR_BOUNDS`]; the nugget has a unit
/// exponential prior truncated below at [`MIN_NUGGET`]. Responses are
/// standardized, so these ranges are on the unit-variance scale.
fn log_target(train: &SurrogateTrainingSet, phi: &[f64]) -> Result<(f64, Option<Integrated>)> {
    let d = train.dim;
    let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo.ln() && v <= hi.ln();
    if !phi[..d].iter().all(|v| inside(*v, LENGTHSCALE_BOUNDS))
        || !inside(phi[d], SIGNAL_VAR_BOUNDS)
        || phi[d + 1] < MIN_NUGGET.ln()
    {
        return Ok((f64::NEG_INFINITY, None));
    }
    let ls: Vec<f64> = phi[..d].iter().map(|v| v.exp()).collect();
    let nugget = phi[d + 1].exp();
    let parts = integrated(train, &ls, phi[d].exp(), nugget)?;
    // exponential prior on the nugget plus the Jacobian of the log transform
    let lp = parts.log_marginal + phi[d + 1] - nugget;
    Ok((
        if lp.is_finite() {
            lp
        } else {
            f64::NEG_INFINITY
        },
        Some(parts),
    ))
}

fn realize(
    train: &SurrogateTrainingSet,
    phi: &[f64],
    parts: &Integrated,
    rng: &mut Rng,
) -> GpHyperState {
    let d = train.dim;
    let p = train.basis_len();
    let mut z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    solve_upper_t(&parts.a_chol, p, &mut z);
    GpHyperState {
        lengthscales: phi[..d].iter().map(|v| v.exp()).collect(),
        signal_var: phi[d].exp(),
        nugget: phi[d + 1].exp(),
        linear_coeffs: parts.beta_hat.iter().zip(&z).map(|(b, e)| b + e).collect(),
    }
}

/// Random-walk Metropolis over the log covariance parameters with the
/// linear coefficients integrated out analytically; each retained draw then
/// samples the coefficients from their exact Gaussian conditional. The step
/// scale adapts towards a 25% acceptance rate during burn-in only.
/// Deterministic in `seed`.
pub fn fit(
    train: &SurrogateTrainingSet,
    schedule: McmcSchedule,
    seed: u64,
) -> Result<SurrogatePosterior> {
    schedule.validate()?;
    if train.len() < 15 {
        return Err(config(format!(
            "surrogate fitting needs at least 15 rows, got {}",
            train.len()
        )));
    }
    let d = train.dim;
    let mut rng = rng_from_seed(seed);
    let mut phi: Vec<f64> = vec![0.5f64.ln(); d];
    phi.push(0.0);
    phi.push(0.1f64.ln());
    let (mut lp, parts) = log_target(train, &phi)?;
    let mut parts = parts.expect("initial state lies inside the prior support");
    let mut scale = 0.3 / ((d + 2) as f64).sqrt();
    let mut proposal = vec![0.0; d + 2];
    let mut window_accepts = 0usize;
    let mut accepts_after_burn = 0usize;
    let mut draws = Vec::with_capacity(schedule.draw_count());

    for it in 0..schedule.total {
        for (q, c) in proposal.iter_mut().zip(&phi) {
            *q = c + scale * rng.sample::<f64, _>(StandardNormal);
        }
        let (lp_new, parts_new) = log_target(train, &proposal)?;
        let log_u: f64 = rng.random::<f64>().ln();
        if lp_new.is_finite() && log_u < lp_new - lp {
            phi.copy_from_slice(&proposal);
            lp = lp_new;
            parts = parts_new.expect("finite target carries its parts");
            window_accepts += 1;
            if it >= schedule.burn {
                accepts_after_burn += 1;
            }
        }
        if it < schedule.burn && (it + 1) % ADAPT_EVERY == 0 {
            let rate = window_accepts as f64 / ADAPT_EVERY as f64;
            scale *= ((rate - TARGET_ACCEPTANCE) * 2.0).exp();
            window_accepts = 0;
        }
        if it >= schedule.burn && (it + 1 - schedule.burn) % schedule.thin == 0 {
            draws.push(realize(train, &phi, &parts, &mut rng));
        }
    }
    let acceptance_rate = accepts_after_burn as f64 / (schedule.total - schedule.burn) as f64;
    log::info!(
        "surrogate chain: acceptance {acceptance_rate:.3}, step scale {scale:.4}, {} draws",
        draws.len()
    );
    Ok(SurrogatePosterior {
        draws,
        train: train.clone(),
        schedule,
        seed,
        acceptance_rate,
        proposal_scale: scale,
    })
}

impl SurrogatePosterior {
    /// One row per draw: lengthscales, signal variance, nugget, linear coefficients.
    pub fn write_draws_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.train.dim;
        let mut header = vec!["draw".to_string()];
        header.extend((0..d).map(|j| format!("lengthscale_{j}")));
        header.push("signal_var".into());
        header.push("nugget".into());
        header.push("intercept".into());
        header.extend((0..d).map(|j| format!("slope_{j}")));
        let io = |e: csv::Error| crate::Error::Io(e.to_string());
        w.write_record(&header).map_err(io)?;
        for (i, s) in self.draws.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(s.lengthscales.iter().map(|v| v.to_string()));
            rec.push(s.signal_var.to_string());
            rec.push(s.nugget.to_string());
            rec.extend(s.linear_coeffs.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| crate::Error::Io(e.to_string()))?;
        Ok(())
    }
}
