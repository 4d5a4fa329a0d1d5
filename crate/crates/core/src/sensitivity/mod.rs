//! Main effects and Sobol indices of response surfaces on the unit cube.
//!
//! Everything here works through [`ResponseSurface`], so the same code runs
//! on posterior draws of the Gaussian-process surrogate and on closed-form
//! test functions. Integration points are Latin hypercube samples, drawn
//! afresh for every surface with a seed derived from the caller's seed and
//! the surface index.

mod effects;
mod report;
mod sobol;

pub use effects::{main_effects, Axis, MainEffectCurve, MainEffectOptions};
pub use report::{format_cell, SensitivityReport};
pub use sobol::{
    saltelli_evaluations, sobol_indices, IndexSummary, SaltelliEvaluations, SensitivityIndices,
    SobolEstimate,
};

use crate::fastmath::{dot, exp_nonpositive};
use crate::surrogate::GpPredictor;

/// A scalar function on `[0, 1]^dim`.
pub trait ResponseSurface: Sync {
    fn dim(&self) -> usize;

    /// Evaluate at row-major points; `out` has one slot per point.
    fn eval_batch(&self, points: &[f64], out: &mut [f64]);

    /// `out[g] = mean_m f(samples_m with coordinate j set to grid[g])`.
    fn main_effect(&self, j: usize, grid: &[f64], samples: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let m = samples.len() / d;
        let mut pts = samples.to_vec();
        let mut vals = vec![0.0; m];
        for (g, o) in grid.iter().zip(out.iter_mut()) {
            for p in pts.chunks_exact_mut(d) {
                p[j] = *g;
            }
            self.eval_batch(&pts, &mut vals);
            *o = vals.iter().sum::<f64>() / m as f64;
        }
    }
}

/// A closure on the unit cube.
pub struct FnSurface<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ResponseSurface for FnSurface<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        for (x, o) in points.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = (self.f)(x);
        }
    }
}

/// A surface that ignores its input.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSurface {
    pub dim: usize,
    pub value: f64,
}

impl ResponseSurface for ConstantSurface {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_batch(&self, _points: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = self.value);
    }
}

impl ResponseSurface for GpPredictor {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        self.predict_into(points, out);
    }

    /// The kernel factorizes over coordinates, so the average over samples
    /// of `k(x, x_i)` with `x_j` pinned splits into a `j` factor and a
    /// sample average that does not depend on the grid value.
    fn main_effect(&self, j: usize, grid: &[f64], samples: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let m = samples.len() / d;
        let n = self.n;
        let mut avg = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut mean_x = vec![0.0; d];
        for x in samples.chunks_exact(d) {
            s.iter_mut().for_each(|v| *v = 0.0);
            for k in (0..d).filter(|&k| k != j) {
                let (xk, c) = (x[k], self.inv2l2[k]);
                for (v, t) in s.iter_mut().zip(self.col(k)) {
                    let e = xk - t;
                    *v += e * e * c;
                }
                mean_x[k] += x[k];
            }
            for (a, v) in avg.iter_mut().zip(&s) {
                *a += exp_nonpositive((-v).max(-700.0));
            }
        }
        let inv_m = 1.0 / m as f64;
        for (a, w) in avg.iter_mut().zip(&self.weights) {
            *a *= w * inv_m;
        }
        let base = self.beta[0]
            + (0..d)
                .filter(|&k| k != j)
                .map(|k| self.beta[k + 1] * mean_x[k] * inv_m)
                .sum::<f64>();
        let cj = self.inv2l2[j];
        let xj = self.col(j);
        for (g, o) in grid.iter().zip(out.iter_mut()) {
            for (v, t) in s.iter_mut().zip(xj) {
                let e = g - t;
                *v = exp_nonpositive((-(e * e * cj)).max(-700.0));
            }
            *o = base + self.beta[j + 1] * g + dot(&s, &avg);
        }
    }
}

impl<S: ResponseSurface> ResponseSurface for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        (**self).eval_batch(points, out)
    }

    fn main_effect(&self, j: usize, grid: &[f64], samples: &[f64], out: &mut [f64]) {
        (**self).main_effect(j, grid, samples, out)
    }
}

/// The Ishigami function on `[−π, π]³` with parameters `a`, `b`, reached
/// from unit-cube coordinates.
pub fn ishigami(a: f64, b: f64) -> FnSurface<impl Fn(&[f64]) -> f64 + Sync> {
    use std::f64::consts::PI;
    FnSurface {
        dim: 3,
        f: move |u: &[f64]| {
            let x = |v: f64| -PI + 2.0 * PI * v;
            let (x1, x2, x3) = (x(u[0]), x(u[1]), x(u[2]));
            x1.sin() + a * x2.sin().powi(2) + b * x3.powi(4) * x1.sin()
        },
    }
}
