use serde::{Deserialize, Serialize};

use super::linalg::{cholesky_in_place, log_det, solve_lower, solve_upper_t};
use crate::error::{contract, Error, Result};
use crate::fastmath::{dot, exp_nonpositive};

/// Jitter values tried, in order, when the kernel matrix fails to factor.
pub const JITTER_LADDER: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Surrogate inputs scaled to the unit cube and standardized responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTrainingSet {
    pub dim: usize,
    /// Row-major `n × dim`, each column min-max scaled with the recorded bounds.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub y_center: f64,
    pub y_scale: f64,
}

impl SurrogateTrainingSet {
    /// Scale `x_raw` (row-major `n × dim`) with the box `[lower, upper]` and
    /// standardize `y_raw` to zero mean and unit (population) variance.
    pub fn new(
        x_raw: &[f64],
        dim: usize,
        y_raw: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self> {
        if dim == 0 || x_raw.len() != y_raw.len() * dim || lower.len() != dim || upper.len() != dim
        {
            return Err(contract(
                "surrogate inputs, responses and bounds disagree in shape",
            ));
        }
        if x_raw.iter().chain(y_raw).any(|v| !v.is_finite()) {
            return Err(contract(
                "surrogate training data contains non-finite values",
            ));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
            return Err(contract("surrogate bounds must satisfy lower < upper"));
        }
        let x = x_raw
            .chunks(dim)
            .flat_map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| (v - lower[j]) / (upper[j] - lower[j]))
            })
            .collect();
        let n = y_raw.len() as f64;
        let y_center = y_raw.iter().sum::<f64>() / n;
        let var = y_raw.iter().map(|v| (v - y_center).powi(2)).sum::<f64>() / n;
        let y_scale = var.sqrt();
        if !(y_scale > 0.0) {
            return Err(Error::DegenerateData("constant surrogate response".into()));
        }
        Ok(Self {
            dim,
            x,
            y: y_raw.iter().map(|v| (v - y_center) / y_scale).collect(),
            x_lower: lower.to_vec(),
            x_upper: upper.to_vec(),
            y_center,
            y_scale,
        })
    }

    /// Inputs already on the unit cube.
    pub fn from_unit(x: &[f64], dim: usize, y_raw: &[f64]) -> Result<Self> {
        Self::new(x, dim, y_raw, &vec![0.0; dim], &vec![1.0; dim])
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn unstandardize(&self, z: f64) -> f64 {
        z * self.y_scale + self.y_center
    }

    /// Number of linear-mean coefficients (intercept plus one slope per input).
    pub fn basis_len(&self) -> usize {
        self.dim + 1
    }
}

/// Hyperparameters of one posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperState {
    pub lengthscales: Vec<f64>,
    pub signal_var: f64,
    pub nugget: f64,
    /// Intercept followed by one slope per input.
    pub linear_coeffs: Vec<f64>,
}

impl GpHyperState {
    pub fn is_valid(&self) -> bool {
        self.lengthscales.iter().all(|l| *l > 0.0 && l.is_finite())
            && self.signal_var > 0.0
            && self.signal_var.is_finite()
            && self.nugget > 0.0
            && self.nugget.is_finite()
            && self.linear_coeffs.iter().all(|b| b.is_finite())
    }

    fn check(&self, train: &SurrogateTrainingSet) -> Result<()> {
        if self.lengthscales.len() != train.dim || self.linear_coeffs.len() != train.basis_len() {
            return Err(contract(
                "hyperparameter state does not match the training inputs",
            ));
        }
        if !self.is_valid() {
            return Err(contract(
                "hyperparameter state has non-positive or non-finite entries",
            ));
        }
        Ok(())
    }
}

pub(crate) fn inv_two_l2(lengthscales: &[f64]) -> Vec<f64> {
    lengthscales.iter().map(|l| 0.5 / (l * l)).collect()
}

/// Correlation `exp(−Σ_d (x_d − x'_d)² / (2ℓ_d²))`.
#[inline]
fn correlation(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum();
    (-s).exp()
}

/// Correlation matrix plus `ratio` on the diagonal.
pub(crate) fn correlation_matrix(
    train: &SurrogateTrainingSet,
    lengthscales: &[f64],
    ratio: f64,
) -> Vec<f64> {
    let n = train.len();
    let c = inv_two_l2(lengthscales);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0 + ratio;
        for j in 0..i {
            let v = correlation(train.row(i), train.row(j), &c);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Lower Cholesky factor of an `n × n` matrix.
pub(crate) struct Factor {
    pub l: Vec<f64>,
    pub n: usize,
}

/// Factor `K`, escalating diagonal jitter along [`JITTER_LADDER`] on failure.
pub(crate) fn factor(k: &[f64], n: usize) -> Result<Factor> {
    let mut l = k.to_vec();
    if cholesky_in_place(&mut l, n) {
        return Ok(Factor { l, n });
    }
    for &j in &JITTER_LADDER {
        l.copy_from_slice(k);
        for i in 0..n {
            l[i * n + i] += j;
        }
        if cholesky_in_place(&mut l, n) {
            log::debug!("kernel matrix needed jitter {j:e}");
            return Ok(Factor { l, n });
        }
    }
    Err(Error::Cholesky {
        size: n,
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

impl Factor {
    fn solve(&self, b: &mut [f64]) {
        solve_lower(&self.l, self.n, b);
        solve_upper_t(&self.l, self.n, b);
    }

    fn log_det(&self) -> f64 {
        log_det(&self.l, self.n)
    }
}

fn linear_mean(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

/// Gaussian log density `log N(y | Hβ, signal_var·C + nugget·I)` at a full
/// hyperparameter state.
pub fn log_likelihood(state: &GpHyperState, train: &SurrogateTrainingSet) -> Result<f64> {
    state.check(train)?;
    let n = train.len();
    let ratio = state.nugget / state.signal_var;
    let f = factor(&correlation_matrix(train, &state.lengthscales, ratio), n)?;
    let mut r: Vec<f64> = (0..n)
        .map(|i| train.y[i] - linear_mean(&state.linear_coeffs, train.row(i)))
        .collect();
    solve_lower(&f.l, n, &mut r);
    let quad = r.iter().map(|v| v * v).sum::<f64>() / state.signal_var;
    let log_det = f.log_det() + n as f64 * state.signal_var.ln();
    Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}

/// Quantities of the kernel model with the linear coefficients integrated out.
pub(crate) struct Integrated {
    pub log_marginal: f64,
    pub beta_hat: Vec<f64>,
    /// Cholesky factor of `Hᵀ K⁻¹ H` (`p × p`).
    pub a_chol: Vec<f64>,
}

pub(crate) fn integrated(
    train: &SurrogateTrainingSet,
    lengthscales: &[f64],
    signal_var: f64,
    nugget: f64,
) -> Result<Integrated> {
    let n = train.len();
    let p = train.basis_len();
    if n <= p {
        return Err(contract(format!(
            "need more than {p} training points, got {n}"
        )));
    }
    let mut k = correlation_matrix(train, lengthscales, nugget / signal_var);
    k.iter_mut().for_each(|v| *v *= signal_var);
    let f = factor(&k, n)?;
    // Z = L⁻¹ H, stored column by column
    let mut z = vec![0.0; p * n];
    for c in 0..p {
        let col = &mut z[c * n..(c + 1) * n];
        for i in 0..n {
            col[i] = if c == 0 {
                1.0
            } else {
                train.x[i * train.dim + c - 1]
            };
        }
        solve_lower(&f.l, n, col);
    }
    let mut w = train.y.clone();
    solve_lower(&f.l, n, &mut w);
    let mut a = vec![0.0; p * p];
    let mut hty = vec![0.0; p];
    for r in 0..p {
        let zr = &z[r * n..(r + 1) * n];
        hty[r] = dot(zr, &w);
        for c in 0..=r {
            let v = dot(zr, &z[c * n..(c + 1) * n]);
            a[r * p + c] = v;
            a[c * p + r] = v;
        }
    }
    let a_f = factor(&a, p)?;
    let mut beta_hat = hty;
    a_f.solve(&mut beta_hat);
    // whitened residual L⁻¹(y − Hβ̂) = w − Zβ̂
    let mut rss = 0.0;
    for i in 0..n {
        let mut v = w[i];
        for c in 0..p {
            v -= z[c * n + i] * beta_hat[c];
        }
        rss += v * v;
    }
    let log_marginal = -0.5 * f.log_det()
        - 0.5 * a_f.log_det()
        - 0.5 * (n - p) as f64 * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * rss;
    Ok(Integrated {
        log_marginal,
        beta_hat,
        a_chol: a_f.l,
    })
}

/// `log ∫ N(y | Hβ, signal_var·C + nugget·I) dβ`: the likelihood of the
/// covariance parameters under a flat prior on the linear coefficients.
pub fn log_integrated_likelihood(
    train: &SurrogateTrainingSet,
    lengthscales: &[f64],
    signal_var: f64,
    nugget: f64,
) -> Result<f64> {
    if lengthscales.len() != train.dim || !(signal_var > 0.0) || !(nugget >= 0.0) {
        return Err(contract("bad covariance parameters"));
    }
    Ok(integrated(train, lengthscales, signal_var, nugget)?.log_marginal)
}

/// Conditional mean of a fitted state, ready for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPredictor {
    pub dim: usize,
    pub n: usize,
    /// Training inputs, one contiguous column per dimension.
    pub(crate) cols: Vec<f64>,
    pub(crate) inv2l2: Vec<f64>,
    /// `(C + ratio·I)⁻¹ (y − Hβ)`.
    pub(crate) weights: Vec<f64>,
    pub(crate) beta: Vec<f64>,
}

impl GpPredictor {
    pub fn new(state: &GpHyperState, train: &SurrogateTrainingSet) -> Result<Self> {
        state.check(train)?;
        let n = train.len();
        let d = train.dim;
        let ratio = state.nugget / state.signal_var;
        let f = factor(&correlation_matrix(train, &state.lengthscales, ratio), n)?;
        let mut weights: Vec<f64> = (0..n)
            .map(|i| train.y[i] - linear_mean(&state.linear_coeffs, train.row(i)))
            .collect();
        f.solve(&mut weights);
        let mut cols = vec![0.0; n * d];
        for i in 0..n {
            for k in 0..d {
                cols[k * n + i] = train.x[i * d + k];
            }
        }
        Ok(Self {
            dim: d,
            n,
            cols,
            inv2l2: inv_two_l2(&state.lengthscales),
            weights,
            beta: state.linear_coeffs.clone(),
        })
    }

    pub(crate) fn col(&self, k: usize) -> &[f64] {
        &self.cols[k * self.n..(k + 1) * self.n]
    }

    /// Predictions at row-major unit-cube points, standardized scale.
    pub fn predict_into(&self, points: &[f64], out: &mut [f64]) {
        let mut s = vec![0.0; self.n];
        for (x, o) in points.chunks_exact(self.dim).zip(out.iter_mut()) {
            s.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..self.dim {
                let (xk, c) = (x[k], self.inv2l2[k]);
                for (v, t) in s.iter_mut().zip(self.col(k)) {
                    let d = xk - t;
                    *v += d * d * c;
                }
            }
            s.iter_mut()
                .for_each(|v| *v = exp_nonpositive((-*v).max(-700.0)));
            *o = linear_mean(&self.beta, x) + dot(&s, &self.weights);
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut out = [0.0];
        self.predict_into(x, &mut out);
        out[0]
    }
}

/// `m(x) + k*ᵀ (K + nugget·I)⁻¹ (y − m(X))` at every row of `x_star`
/// (unit-cube coordinates), on the standardized response scale.
pub fn predict_mean(
    state: &GpHyperState,
    train: &SurrogateTrainingSet,
    x_star: &[f64],
) -> Result<Vec<f64>> {
    if x_star.len() % train.dim != 0 {
        return Err(contract(
            "prediction points do not match the input dimension",
        ));
    }
    let pred = GpPredictor::new(state, train)?;
    let mut out = vec![0.0; x_star.len() / train.dim];
    pred.predict_into(x_star, &mut out);
    Ok(out)
}
