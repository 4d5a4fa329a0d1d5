use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ResponseSurface;
use crate::design::lhs_unit;
use crate::error::{config, contract, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::quantile_sorted;

/// Surface values on the Saltelli design: base matrices `A`, `B` and the
/// hybrids `A_B^j` (`A` with column `j` taken from `B`).
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliEvaluations {
    pub n: usize,
    pub dim: usize,
    pub f_a: Vec<f64>,
    pub f_b: Vec<f64>,
    /// `dim × n`, row `j` holding `f(A_B^j)`.
    pub f_ab: Vec<f64>,
}

/// First-order and total indices of one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolEstimate {
    pub first: Vec<f64>,
    pub total: Vec<f64>,
    pub variance: f64,
}

/// Evaluate `surface` on fresh LHS base matrices of size `n`.
pub fn saltelli_evaluations<S: ResponseSurface>(
    surface: &S,
    n: usize,
    seed: u64,
) -> SaltelliEvaluations {
    let d = surface.dim();
    let mut rng = rng_from_seed(seed);
    let a = lhs_unit(n, d, &mut rng);
    let b = lhs_unit(n, d, &mut rng);
    let mut f_a = vec![0.0; n];
    let mut f_b = vec![0.0; n];
    surface.eval_batch(&a, &mut f_a);
    surface.eval_batch(&b, &mut f_b);
    let mut f_ab = vec![0.0; d * n];
    let mut hybrid = a.clone();
    for j in 0..d {
        for i in 0..n {
            hybrid[i * d + j] = b[i * d + j];
        }
        surface.eval_batch(&hybrid, &mut f_ab[j * n..(j + 1) * n]);
        for i in 0..n {
            hybrid[i * d + j] = a[i * d + j];
        }
    }
    SaltelliEvaluations {
        n,
        dim: d,
        f_a,
        f_b,
        f_ab,
    }
}

impl SaltelliEvaluations {
    /// Population variance of the pooled `A` and `B` evaluations.
    pub fn variance(&self) -> f64 {
        pooled_variance(self.f_a.iter().chain(&self.f_b).copied())
    }

    /// `S_j = mean((f_B − f̄)·(f_ABj − f_A)) / V` with `f̄` the pooled mean
    /// (exactly shift invariant), `T_j = mean((f_A − f_ABj)²) / (2V)`;
    /// `None` when the surface has no variance.
    pub fn estimate(&self) -> Option<SobolEstimate> {
        let idx: Vec<usize> = (0..self.n).collect();
        self.estimate_on(&idx)
    }

    fn estimate_on(&self, idx: &[usize]) -> Option<SobolEstimate> {
        let variance = pooled_variance(idx.iter().flat_map(|&i| [self.f_a[i], self.f_b[i]]));
        let mean =
            idx.iter().map(|&i| self.f_a[i] + self.f_b[i]).sum::<f64>() / (2 * idx.len()) as f64;
        let mean_sq = mean * mean;
        if !(variance > 1e-14 * mean_sq) || variance <= 0.0 {
            return None;
        }
        let m = idx.len() as f64;
        let mut first = Vec::with_capacity(self.dim);
        let mut total = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let ab = &self.f_ab[j * self.n..(j + 1) * self.n];
            let mut s = 0.0;
            let mut t = 0.0;
            for &i in idx {
                s += (self.f_b[i] - mean) * (ab[i] - self.f_a[i]);
                t += (self.f_a[i] - ab[i]).powi(2);
            }
            first.push(s / m / variance);
            total.push(t / (2.0 * m) / variance);
        }
        Some(SobolEstimate {
            first,
            total,
            variance,
        })
    }

    /// Bootstrap standard errors of `(S_j, T_j, Σ_j S_j)` over the base rows.
    pub fn bootstrap_se(&self, reps: usize, seed: u64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let mut rng = rng_from_seed(seed);
        let mut firsts = vec![Vec::with_capacity(reps); self.dim];
        let mut totals = vec![Vec::with_capacity(reps); self.dim];
        let mut sums = Vec::with_capacity(reps);
        let mut idx = vec![0usize; self.n];
        for _ in 0..reps {
            idx.iter_mut()
                .for_each(|i| *i = rng.random_range(0..self.n));
            let e = self.estimate_on(&idx)?;
            for j in 0..self.dim {
                firsts[j].push(e.first[j]);
                totals[j].push(e.total[j]);
            }
            sums.push(e.first.iter().sum::<f64>());
        }
        let sd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1).max(1) as f64).sqrt()
        };
        Some((
            firsts.iter().map(|v| sd(v)).collect(),
            totals.iter().map(|v| sd(v)).collect(),
            sd(&sums),
        ))
    }
}

fn pooled_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let m = sum / n as f64;
    values.map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64
}

/// Posterior mean and 5%/95% quantiles of one index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

impl IndexSummary {
    fn of(values: &mut [f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.sort_by(f64::total_cmp);
        Some(Self {
            mean,
            q05: quantile_sorted(values, 0.05),
            q95: quantile_sorted(values, 0.95),
        })
    }
}

/// Indices aggregated over surfaces. An entry is `None` when no surface had
/// positive variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityIndices {
    pub names: Vec<String>,
    pub first: Vec<Option<IndexSummary>>,
    pub total: Vec<Option<IndexSummary>>,
    pub base_samples: usize,
    /// Raw per-surface estimates (`None` for zero-variance surfaces).
    pub per_draw: Vec<Option<SobolEstimate>>,
}

impl SensitivityIndices {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn undefined_draws(&self) -> usize {
        self.per_draw.iter().filter(|e| e.is_none()).count()
    }
}

/// Saltelli-scheme indices for every surface, with a fresh pair of LHS base
/// matrices of size `n` per surface, aggregated across surfaces.
pub fn sobol_indices<S: ResponseSurface>(
    draws: &[S],
    names: &[String],
    n: usize,
    seed: u64,
) -> Result<SensitivityIndices> {
    if n < 1000 {
        return Err(config(format!(
            "Sobol estimation needs at least 1000 base samples, got {n}"
        )));
    }
    let d = names.len();
    if draws.is_empty() || draws.iter().any(|s| s.dim() != d) {
        return Err(contract(
            "surfaces and names disagree in dimension, or no surfaces given",
        ));
    }
    let per_draw: Vec<Option<SobolEstimate>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, s)| saltelli_evaluations(s, n, derive_seed(seed, i as u64)).estimate())
        .collect();
    let mut first = Vec::with_capacity(d);
    let mut total = Vec::with_capacity(d);
    for j in 0..d {
        let mut f: Vec<f64> = per_draw.iter().flatten().map(|e| e.first[j]).collect();
        let mut t: Vec<f64> = per_draw.iter().flatten().map(|e| e.total[j]).collect();
        first.push(IndexSummary::of(&mut f));
        total.push(IndexSummary::of(&mut t));
    }
    Ok(SensitivityIndices {
        names: names.to_vec(),
        first,
        total,
        base_samples: n,
        per_draw,
    })
}
