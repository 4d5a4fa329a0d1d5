use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ResponseSurface;
use crate::design::{lhs_unit, DesignSpace};
use crate::error::{config, contract, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::quantile_sorted;

/// Name and reporting range of one surface input. The surface itself sees
/// `[0, 1]`; the range only labels the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Axis {
    pub fn from_space(space: &DesignSpace) -> Vec<Axis> {
        space
            .dims
            .iter()
            .map(|d| Axis {
                name: d.name.clone(),
                lower: d.lower,
                upper: d.upper,
            })
            .collect()
    }

    pub fn unit(names: &[&str]) -> Vec<Axis> {
        names
            .iter()
            .map(|n| Axis {
                name: n.to_string(),
                lower: 0.0,
                upper: 1.0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainEffectOptions {
    pub grid: usize,
    pub samples: usize,
}

impl Default for MainEffectOptions {
    fn default() -> Self {
        Self {
            grid: 21,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffectCurve {
    pub dimension: usize,
    pub name: String,
    pub grid: Vec<f64>,
    pub mean_curve: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
    /// Grid value at which `mean_curve` is smallest.
    pub argmin: f64,
}

impl MainEffectCurve {
    /// The curve of `a·f + b` for `a > 0`.
    pub fn map_affine(&self, a: f64, b: f64) -> Self {
        let f = |v: &Vec<f64>| v.iter().map(|x| a * x + b).collect();
        Self {
            mean_curve: f(&self.mean_curve),
            q05: f(&self.q05),
            q95: f(&self.q95),
            ..self.clone()
        }
    }

    /// `max − min` of the posterior-mean curve.
    pub fn range(&self) -> f64 {
        let hi = self
            .mean_curve
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self
            .mean_curve
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Posterior main effect of every input: for each surface, each input `j`
/// and each grid value `g`, the average of the surface over `samples` LHS
/// points of the other inputs with input `j` pinned to `g`; then the mean
/// and 5%/95% quantiles across surfaces.
pub fn main_effects<S: ResponseSurface>(
    draws: &[S],
    axes: &[Axis],
    opts: MainEffectOptions,
    seed: u64,
) -> Result<Vec<MainEffectCurve>> {
    if opts.grid < 5 || opts.samples < 100 {
        return Err(config(format!(
            "main effects need at least 5 grid points and 100 samples, got {} and {}",
            opts.grid, opts.samples
        )));
    }
    let d = axes.len();
    if draws.is_empty() || draws.iter().any(|s| s.dim() != d) {
        return Err(contract(
            "surfaces and axes disagree in dimension, or no surfaces given",
        ));
    }
    let g = opts.grid;
    let unit_grid: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    // per draw: d × g values
    let per_draw: Vec<Vec<f64>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let samples = lhs_unit(opts.samples, d, &mut rng);
            let mut out = vec![0.0; d * g];
            for j in 0..d {
                s.main_effect(j, &unit_grid, &samples, &mut out[j * g..(j + 1) * g]);
            }
            out
        })
        .collect();
    let k = draws.len();
    let mut curves = Vec::with_capacity(d);
    let mut column = vec![0.0; k];
    for (j, axis) in axes.iter().enumerate() {
        let grid: Vec<f64> = unit_grid
            .iter()
            .map(|u| axis.lower + u * (axis.upper - axis.lower))
            .collect();
        let (mut mean, mut q05, mut q95) = (vec![0.0; g], vec![0.0; g], vec![0.0; g]);
        for gi in 0..g {
            for (c, vals) in column.iter_mut().zip(&per_draw) {
                *c = vals[j * g + gi];
            }
            mean[gi] = column.iter().sum::<f64>() / k as f64;
            column.sort_by(f64::total_cmp);
            q05[gi] = quantile_sorted(&column, 0.05);
            q95[gi] = quantile_sorted(&column, 0.95);
        }
        let best = (0..g).fold(0, |b, i| if mean[i] < mean[b] { i } else { b });
        curves.push(MainEffectCurve {
            dimension: j,
            name: axis.name.clone(),
            argmin: grid[best],
            grid,
            mean_curve: mean,
            q05,
            q95,
        });
    }
    Ok(curves)
}
