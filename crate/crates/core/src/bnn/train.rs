use std::io::Write;

use super::config::HyperConfig;
use super::loss::{evaluate, Gradient, Workspace};
use super::network::NetworkShape;
use super::posterior::{NoiseDraws, VariationalPosterior};
use crate::dgm::StandardizedDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, fill_standard_normal, rng_from_seed};

/// Constant factor applied to every gradient step: `σ²_std / N_train`.
///
/// The objectives are sums over training points measured in units of the
/// noise variance. Multiplying the step by this factor makes the learning
/// rate act on the per-point squared-error scale (the output bias moves by
/// `lr · mean residual`), which keeps the configured learning-rate range
/// meaningful independently of `N_train` and of the noise level. The
/// minimizer of the objective is unchanged.
pub fn step_scale(data: &StandardizedDataset) -> f64 {
    data.std_noise_var / data.n_train() as f64
}

/// Fit `q` with full-batch gradient descent. Deterministic in `seed`.
pub fn train(
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
) -> Result<VariationalPosterior> {
    run(data, cfg, seed, None)
}

/// Like [`train`], additionally returning `(step, loss)` every `every` steps.
pub fn train_traced(
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
    every: usize,
) -> Result<(VariationalPosterior, Vec<(usize, f64)>)> {
    let mut trace = Vec::new();
    let q = run(data, cfg, seed, Some((every.max(1), &mut trace)))?;
    Ok((q, trace))
}

fn run(
    data: &StandardizedDataset,
    cfg: &HyperConfig,
    seed: u64,
    mut trace: Option<(usize, &mut Vec<(usize, f64)>)>,
) -> Result<VariationalPosterior> {
    cfg.validate()?;
    let objective = cfg.effective_objective();
    let shape = NetworkShape::new(data.input_dim, cfg.nn_features);
    let mut q = VariationalPosterior::init(shape, derive_seed(seed, 0));
    let p = q.param_count();
    let k = cfg.mc_samples;
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let mut noise = NoiseDraws {
        k,
        p,
        eps: vec![0.0; k * p],
    };
    let mut ws = Workspace::new(data, p, k);
    let mut grad = Gradient {
        means: vec![0.0; p],
        log_sds: vec![0.0; p],
    };
    let step = cfg.learning_rate * step_scale(data);

    for t in 0..cfg.optimizer_steps {
        fill_standard_normal(&mut rng, &mut noise.eps);
        let loss = evaluate(
            &q,
            data,
            objective,
            cfg.prior_mean,
            cfg.prior_sd,
            &noise,
            &mut ws,
            &mut grad,
        );
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::Diverged { step: t });
        }
        if let Some((every, ref mut out)) = trace {
            if t % every == 0 {
                out.push((t, loss));
            }
        }
        for i in 0..p {
            q.means[i] -= step * grad.means[i];
            q.log_sds[i] -= step * grad.log_sds[i];
        }
    }
    if !q.is_finite() {
        return Err(Error::Diverged {
            step: cfg.optimizer_steps,
        });
    }
    Ok(q)
}

/// Write a loss trace as `step,loss`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[(usize, f64)]) -> std::io::Result<()> {
    writeln!(out, "step,loss")?;
    for (s, l) in trace {
        writeln!(out, "{s},{l}")?;
    }
    Ok(())
}
