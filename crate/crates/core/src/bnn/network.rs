use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Architecture of the two-layer tanh network.
///
/// Parameters are packed as `[W₁ (hidden × input_dim, row-major), b₁ (hidden),
/// w₂ (hidden), b₂]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub hidden: usize,
}

impl NetworkShape {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        Self { input_dim, hidden }
    }

    pub fn param_count(&self) -> usize {
        self.hidden * (self.input_dim + 2) + 1
    }

    #[inline]
    fn b1_offset(&self) -> usize {
        self.hidden * self.input_dim
    }

    /// Network output at `x` for the packed parameters `theta`.
    pub fn forward(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        if theta.len() != self.param_count() {
            return Err(contract(format!(
                "theta has {} entries, network needs {}",
                theta.len(),
                self.param_count()
            )));
        }
        if x.len() != self.input_dim {
            return Err(contract(format!(
                "input has {} coordinates, expected {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(self.forward_unchecked(theta, x))
    }

    #[inline]
    pub(crate) fn forward_unchecked(&self, theta: &[f64], x: &[f64]) -> f64 {
        let d = self.input_dim;
        let (w1, rest) = theta.split_at(self.b1_offset());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        let mut out = b2[0];
        for j in 0..self.hidden {
            let row = &w1[j * d..(j + 1) * d];
            let pre = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out += w2[j] * tanh(pre);
        }
        out
    }

    /// Outputs for every column of `inputs`; `act` needs `inputs.len()` slots.
    pub(crate) fn forward_batch(
        &self,
        theta: &[f64],
        inputs: &ColumnInputs,
        out: &mut [f64],
        act: &mut [f64],
    ) {
        let d = self.input_dim;
        let n = inputs.len;
        let (w1, rest) = theta.split_at(self.b1_offset());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        out[..n].iter_mut().for_each(|o| *o = b2[0]);
        let act = &mut act[..n];
        for j in 0..self.hidden {
            hidden_activations(&w1[j * d..(j + 1) * d], b1[j], inputs, act);
            let w = w2[j];
            for (o, a) in out[..n].iter_mut().zip(act.iter()) {
                *o += w * a;
            }
        }
    }

    /// Negative Gaussian log likelihood `Σᵢ −log N(yᵢ | g(xᵢ, θ), noise_var)`
    /// and its gradient with respect to `theta`, written into `grad`.
    pub(crate) fn nll_and_grad(
        &self,
        theta: &[f64],
        inputs: &ColumnInputs,
        ys: &[f64],
        noise_var: f64,
        grad: &mut [f64],
        scratch: &mut NetScratch,
    ) -> f64 {
        let d = self.input_dim;
        let h = self.hidden;
        let n = inputs.len;
        scratch.ensure(h, n);
        let (w1, rest) = theta.split_at(self.b1_offset());
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let out = &mut scratch.out[..n];
        out.iter_mut().for_each(|o| *o = b2[0]);
        for j in 0..h {
            let act = &mut scratch.act[j * n..(j + 1) * n];
            hidden_activations(&w1[j * d..(j + 1) * d], b1[j], inputs, act);
            let w = w2[j];
            for (o, a) in out.iter_mut().zip(act.iter()) {
                *o += w * a;
            }
        }
        let inv_var = 1.0 / noise_var;
        let dout = &mut scratch.dout[..n];
        for ((r, o), y) in dout.iter_mut().zip(out.iter()).zip(ys) {
            *r = o - y;
        }
        let sse = dot(dout, dout);
        dout.iter_mut().for_each(|r| *r *= inv_var);

        let (g_w1, g_rest) = grad.split_at_mut(self.b1_offset());
        let (g_b1, g_rest) = g_rest.split_at_mut(h);
        let (g_w2, g_b2) = g_rest.split_at_mut(h);
        g_b2[0] = dout.iter().sum();
        let dpre = &mut scratch.dpre[..n];
        for j in 0..h {
            let act = &scratch.act[j * n..(j + 1) * n];
            g_w2[j] = dot(dout, act);
            let w = w2[j];
            for ((t, g), a) in dpre.iter_mut().zip(dout.iter()).zip(act) {
                *t = g * w * (1.0 - a * a);
            }
            g_b1[j] = dpre.iter().sum();
            for k in 0..d {
                g_w1[j * d + k] = dot(dpre, inputs.col(k));
            }
        }
        0.5 * n as f64 * (2.0 * std::f64::consts::PI * noise_var).ln() + 0.5 * sse * inv_var
    }
}

/// Inputs stored one coordinate per contiguous column.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ColumnInputs {
    pub dim: usize,
    pub len: usize,
    cols: Vec<f64>,
}

impl ColumnInputs {
    pub(crate) fn from_rows(rows: &[f64], dim: usize) -> Self {
        let len = rows.len() / dim;
        let mut cols = vec![0.0; rows.len()];
        for (i, x) in rows.chunks_exact(dim).enumerate() {
            for k in 0..dim {
                cols[k * len + i] = x[k];
            }
        }
        Self { dim, len, cols }
    }

    #[inline]
    pub(crate) fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.len..(k + 1) * self.len]
    }
}

/// Activation and gradient buffers for one network evaluation.
#[derive(Debug, Default)]
pub(crate) struct NetScratch {
    act: Vec<f64>,
    out: Vec<f64>,
    dout: Vec<f64>,
    dpre: Vec<f64>,
}

impl NetScratch {
    fn ensure(&mut self, hidden: usize, n: usize) {
        if self.act.len() < hidden * n {
            self.act.resize(hidden * n, 0.0);
        }
        if self.out.len() < n {
            self.out.resize(n, 0.0);
            self.dout.resize(n, 0.0);
            self.dpre.resize(n, 0.0);
        }
    }
}

use crate::fastmath::dot;

fn hidden_activations(w: &[f64], b: f64, inputs: &ColumnInputs, act: &mut [f64]) {
    match inputs.dim {
        1 => {
            let w0 = w[0];
            for (a, x) in act.iter_mut().zip(inputs.col(0)) {
                *a = tanh(b + w0 * x);
            }
        }
        2 => {
            let (w0, w1) = (w[0], w[1]);
            for ((a, x0), x1) in act.iter_mut().zip(inputs.col(0)).zip(inputs.col(1)) {
                *a = tanh(b + w0 * x0 + w1 * x1);
            }
        }
        _ => {
            act.iter_mut().for_each(|a| *a = b);
            for (k, wk) in w.iter().enumerate() {
                for (a, x) in act.iter_mut().zip(inputs.col(k)) {
                    *a += wk * x;
                }
            }
            act.iter_mut().for_each(|a| *a = tanh(*a));
        }
    }
}

/// Hyperbolic tangent, accurate to a few ulp and written so the compiler can
/// vectorize loops over it.
#[inline(always)]
pub(crate) fn tanh(x: f64) -> f64 {
    let ax = x.abs().min(20.0);
    let e = crate::fastmath::exp_nonpositive(-2.0 * ax);
    ((1.0 - e) / (1.0 + e)).copysign(x)
}
