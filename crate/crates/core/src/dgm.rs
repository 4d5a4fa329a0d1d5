//! Synthetic data generating mechanisms and response standardization.
//!
//! Two homoskedastic polynomial regressions are provided:
//!
//! * `R1`: `y = x³ − x² + 3 + ε`, `x ~ U[−2, 2]`, `ε ~ N(0, 0.5²)`
//! * `R2`: `y = 5 + 3x₁ + 4x₂ + 10x₁² + 1.5x₂² + ε`, `x ~ U[0, 1]²`, `ε ~ N(0, 1)`
//!
//! Responses are standardized with statistics of the *noise-free* training
//! values `h(xᵢ)`: `(y − mean h) / sqrt(σ² + var h)`, with `var` the
//! population variance. Test responses reuse the training statistics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Error, Result};
use crate::rng::{derive_seed, fill_standard_normal, rng_from_seed};
use crate::stats::{mean, population_variance};

/// Which data generating mechanism produced a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DgmTag {
    R1,
    R2,
}

impl DgmTag {
    pub fn input_dim(self) -> usize {
        match self {
            DgmTag::R1 => 1,
            DgmTag::R2 => 2,
        }
    }

    /// Standard deviation of the additive Gaussian noise.
    pub fn noise_sd(self) -> f64 {
        match self {
            DgmTag::R1 => 0.5,
            DgmTag::R2 => 1.0,
        }
    }

    /// Per-coordinate input domain.
    pub fn domain(self) -> (f64, f64) {
        match self {
            DgmTag::R1 => (-2.0, 2.0),
            DgmTag::R2 => (0.0, 1.0),
        }
    }

    /// Noise-free response `h(x)`.
    pub fn clean_value(self, x: &[f64]) -> f64 {
        match self {
            DgmTag::R1 => {
                let x = x[0];
                x * x * x - x * x + 3.0
            }
            DgmTag::R2 => {
                let (a, b) = (x[0], x[1]);
                5.0 + 3.0 * a + 4.0 * b + 10.0 * a * a + 1.5 * b * b
            }
        }
    }

    /// Map a raw input onto the network's `[0, 1]` input scale.
    pub fn rescale_input(self, x: f64) -> f64 {
        match self {
            DgmTag::R1 => (x + 2.0) / 4.0,
            DgmTag::R2 => x,
        }
    }
}

impl fmt::Display for DgmTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DgmTag::R1 => "R1",
            DgmTag::R2 => "R2",
        })
    }
}

impl FromStr for DgmTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r1" | "1d" | "x1d" => Ok(DgmTag::R1),
            "r2" | "2d" | "x2d" => Ok(DgmTag::R2),
            other => Err(config(format!(
                "unknown data generating mechanism `{other}`"
            ))),
        }
    }
}

/// A sample drawn from a data generating mechanism, on its natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub dgm: DgmTag,
    /// Row-major `len × dim` inputs.
    pub inputs: Vec<f64>,
    pub responses: Vec<f64>,
    pub clean_values: Vec<f64>,
    pub noise_sd: f64,
}

impl RawDataset {
    /// Assemble a dataset from parts. `noise_sd` may be zero, which is
    /// useful for exercising standardization by hand.
    pub fn new(
        dgm: DgmTag,
        inputs: Vec<f64>,
        responses: Vec<f64>,
        clean_values: Vec<f64>,
        noise_sd: f64,
    ) -> Result<Self> {
        let d = dgm.input_dim();
        if inputs.len() != responses.len() * d || clean_values.len() != responses.len() {
            return Err(contract(
                "inputs, responses and clean values disagree in length",
            ));
        }
        if !(noise_sd >= 0.0) {
            return Err(contract("noise_sd must be nonnegative"));
        }
        Ok(Self {
            dgm,
            inputs,
            responses,
            clean_values,
            noise_sd,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.dgm.input_dim()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let d = self.input_dim();
        &self.inputs[i * d..(i + 1) * d]
    }
}

fn sample(dgm: DgmTag, n: usize, seed: u64) -> RawDataset {
    let d = dgm.input_dim();
    let (lo, hi) = dgm.domain();
    let mut rng = rng_from_seed(seed);
    let inputs: Vec<f64> = (0..n * d).map(|_| rng.random_range(lo..hi)).collect();
    let clean_values: Vec<f64> = inputs.chunks(d).map(|x| dgm.clean_value(x)).collect();
    let mut noise = vec![0.0; n];
    fill_standard_normal(&mut rng, &mut noise);
    let sd = dgm.noise_sd();
    let responses = clean_values
        .iter()
        .zip(&noise)
        .map(|(h, e)| h + sd * e)
        .collect();
    RawDataset {
        dgm,
        inputs,
        responses,
        clean_values,
        noise_sd: sd,
    }
}

/// Draw independent train and test sets. Deterministic in `seed`.
pub fn generate(
    dgm: DgmTag,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(RawDataset, RawDataset)> {
    if n_train < 2 {
        return Err(config(format!("n_train must be at least 2, got {n_train}")));
    }
    if n_test < 1 {
        return Err(config("n_test must be at least 1"));
    }
    let train = sample(dgm, n_train, derive_seed(seed, 0));
    let test = sample(dgm, n_test, derive_seed(seed, 1));
    Ok((train, test))
}

/// Standardized train/test data ready for network fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedDataset {
    pub dgm: DgmTag,
    pub input_dim: usize,
    /// Row-major inputs on the `[0, 1]` network scale.
    pub train_inputs: Vec<f64>,
    pub test_inputs: Vec<f64>,
    pub train_responses: Vec<f64>,
    pub test_responses: Vec<f64>,
    /// Noise-free test values on the standardized scale.
    pub test_clean: Vec<f64>,
    pub std_noise_var: f64,
    pub center: f64,
    pub scale: f64,
}

impl StandardizedDataset {
    pub fn n_train(&self) -> usize {
        self.train_responses.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_responses.len()
    }

    pub fn train_input(&self, i: usize) -> &[f64] {
        &self.train_inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn test_input(&self, i: usize) -> &[f64] {
        &self.test_inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn standardize_value(&self, y: f64) -> f64 {
        (y - self.center) / self.scale
    }

    pub fn unstandardize(&self, z: f64) -> f64 {
        z * self.scale + self.center
    }
}

/// Standardize responses with noise-free training statistics.
pub fn standardize(train: &RawDataset, test: &RawDataset) -> Result<StandardizedDataset> {
    if train.dgm != test.dgm {
        return Err(contract("train and test come from different mechanisms"));
    }
    if train.len() < 2 {
        return Err(contract(
            "standardization needs at least two training points",
        ));
    }
    let center = mean(&train.clean_values);
    let var_h = population_variance(&train.clean_values);
    let sigma2 = train.noise_sd * train.noise_sd;
    let scale = (sigma2 + var_h).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateData(
            "zero standardization scale: constant clean values and no noise".into(),
        ));
    }
    let z = |y: &f64| (y - center) / scale;
    let dgm = train.dgm;
    Ok(StandardizedDataset {
        dgm,
        input_dim: dgm.input_dim(),
        train_inputs: train.inputs.iter().map(|&x| dgm.rescale_input(x)).collect(),
        test_inputs: test.inputs.iter().map(|&x| dgm.rescale_input(x)).collect(),
        train_responses: train.responses.iter().map(z).collect(),
        test_responses: test.responses.iter().map(z).collect(),
        test_clean: test.clean_values.iter().map(z).collect(),
        std_noise_var: sigma2 / (scale * scale),
        center,
        scale,
    })
}

/// Write both splits as CSV: `split,x1[,x2],y_raw,y_std,clean`.
pub fn write_csv<W: Write>(
    mut out: W,
    train: &RawDataset,
    test: &RawDataset,
    std: &StandardizedDataset,
) -> std::io::Result<()> {
    let d = train.input_dim();
    let xs: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    writeln!(out, "split,{},y_raw,y_std,clean", xs.join(","))?;
    for (split, raw, z) in [
        ("train", train, &std.train_responses),
        ("test", test, &std.test_responses),
    ] {
        for i in 0..raw.len() {
            let x: Vec<String> = raw.input(i).iter().map(|v| v.to_string()).collect();
            writeln!(
                out,
                "{split},{},{},{},{}",
                x.join(","),
                raw.responses[i],
                z[i],
                raw.clean_values[i]
            )?;
        }
    }
    Ok(())
}
