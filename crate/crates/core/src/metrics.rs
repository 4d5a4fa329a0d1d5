//! Goodness-of-fit metrics for a posterior predictive.
//!
//! **The interval score is a sum over test points**, not an average:
//!
//! ```text
//! IS = Σᵢ (uᵢ − lᵢ) + (2/α)(lᵢ − yᵢ)·1[yᵢ < lᵢ] + (2/α)(yᵢ − uᵢ)·1[yᵢ > uᵢ]
//! ```
//!
//! [`interval_score_mean`] divides by the number of points for callers who
//! want a size-independent number.

use serde::{Deserialize, Serialize};

use crate::bnn::{Divergence, HyperConfig, PredictiveSummary};
use crate::dgm::DgmTag;
use crate::error::{contract, Result};

/// Root mean squared error of the predictive mean.
pub fn rmse(predictive_mean: &[f64], test_responses: &[f64]) -> Result<f64> {
    if predictive_mean.is_empty() {
        return Err(contract("rmse of an empty sample"));
    }
    if predictive_mean.len() != test_responses.len() {
        return Err(contract("prediction and response lengths differ"));
    }
    let sse: f64 = predictive_mean
        .iter()
        .zip(test_responses)
        .map(|(g, y)| (y - g) * (y - g))
        .sum();
    Ok((sse / predictive_mean.len() as f64).sqrt())
}

/// Interval score summed over all test points at miscoverage `level`.
pub fn interval_score(
    lower: &[f64],
    upper: &[f64],
    test_responses: &[f64],
    level: f64,
) -> Result<f64> {
    if lower.len() != upper.len() || lower.len() != test_responses.len() {
        return Err(contract("interval bounds and responses differ in length"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(contract(format!(
            "interval level must lie in (0, 1), got {level}"
        )));
    }
    let penalty = 2.0 / level;
    let mut total = 0.0;
    for (i, ((&l, &u), &y)) in lower.iter().zip(upper).zip(test_responses).enumerate() {
        if l > u {
            return Err(contract(format!(
                "crossed interval at point {i}: lower {l} > upper {u}"
            )));
        }
        total += u - l;
        if y < l {
            total += penalty * (l - y);
        } else if y > u {
            total += penalty * (y - u);
        }
    }
    Ok(total)
}

/// Per-point average of [`interval_score`].
pub fn interval_score_mean(
    lower: &[f64],
    upper: &[f64],
    test_responses: &[f64],
    level: f64,
) -> Result<f64> {
    if lower.is_empty() {
        return Err(contract("interval score of an empty sample"));
    }
    Ok(interval_score(lower, upper, test_responses, level)? / lower.len() as f64)
}

/// `(rmse, interval score)` of a predictive summary.
pub fn score(summary: &PredictiveSummary, test_responses: &[f64]) -> Result<(f64, f64)> {
    Ok((
        rmse(&summary.mean, test_responses)?,
        interval_score(
            &summary.lower,
            &summary.upper,
            test_responses,
            summary.level,
        )?,
    ))
}

/// One experiment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub config: HyperConfig,
    pub dgm: DgmTag,
    pub divergence: Divergence,
    pub seed: u64,
    pub rmse: f64,
    pub interval_score: f64,
    pub diverged: bool,
}
