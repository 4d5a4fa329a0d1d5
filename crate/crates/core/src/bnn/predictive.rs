use serde::{Deserialize, Serialize};

use super::network::ColumnInputs;
use super::posterior::VariationalPosterior;
use crate::error::{contract, Result};
use crate::rng::{fill_standard_normal, rng_from_seed};
use crate::stats::quantile_sorted;

/// Central-interval miscoverage level used when none is given.
pub const DEFAULT_LEVEL: f64 = 0.1;
pub const DEFAULT_PREDICTIVE_DRAWS: usize = 2000;

/// Monte Carlo summary of the posterior predictive at the test inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub n_draws: usize,
}

/// Sample `θ ~ q`, evaluate the network, add observation noise, and
/// summarize per test point by the sample mean and the empirical
/// `level/2`, `1 − level/2` quantiles (linear interpolation between order
/// statistics).
pub fn posterior_predictive(
    q: &VariationalPosterior,
    test_inputs: &[f64],
    noise_var: f64,
    n_draws: usize,
    level: f64,
    seed: u64,
) -> Result<PredictiveSummary> {
    if n_draws < 100 {
        return Err(contract(format!(
            "posterior predictive needs at least 100 draws, got {n_draws}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(contract(format!(
            "interval level must lie in (0, 1), got {level}"
        )));
    }
    let d = q.shape.input_dim;
    if d == 0 || test_inputs.len() % d != 0 {
        return Err(contract(
            "test inputs do not match the network input dimension",
        ));
    }
    let m = test_inputs.len() / d;
    let p = q.param_count();
    let sds = q.sds();
    let noise_sd = noise_var.max(0.0).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut eps = vec![0.0; p];
    let mut obs_noise = vec![0.0; m];
    let mut theta = vec![0.0; p];
    let cols = ColumnInputs::from_rows(test_inputs, d);
    let mut out = vec![0.0; m];
    let mut act = vec![0.0; m];
    // Column-major per test point so each point's draws are contiguous.
    let mut draws = vec![0.0; m * n_draws];
    for s in 0..n_draws {
        fill_standard_normal(&mut rng, &mut eps);
        fill_standard_normal(&mut rng, &mut obs_noise);
        q.transform_into(&eps, &sds, &mut theta);
        q.shape.forward_batch(&theta, &cols, &mut out, &mut act);
        for i in 0..m {
            draws[i * n_draws + s] = out[i] + noise_sd * obs_noise[i];
        }
    }
    let mut mean = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for col in draws.chunks_exact_mut(n_draws) {
        mean.push(col.iter().sum::<f64>() / n_draws as f64);
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(col, level / 2.0));
        upper.push(quantile_sorted(col, 1.0 - level / 2.0));
    }
    Ok(PredictiveSummary {
        mean,
        lower,
        upper,
        level,
        n_draws,
    })
}
