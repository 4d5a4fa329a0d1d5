//! Latin hypercube designs over the hyperparameter box.
//!
//! Coordinates are kept in "design units": `log10` for the log-scaled
//! dimensions (γ, σ₀, learning rate) and natural units otherwise. Integer
//! dimensions are sampled continuously and rounded afterwards.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bnn::{Divergence, HyperConfig, Objective};
use crate::error::{config, contract, Error, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    /// Bounds in design units.
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
    pub integer: bool,
}

impl Dimension {
    fn new(name: &str, lower: f64, upper: f64, scale: Scale, integer: bool) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            scale,
            integer,
        }
    }

    /// Natural-scale value of a design-unit coordinate.
    pub fn natural(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log10 => 10f64.powf(v),
        }
    }

    /// Affine map of a design-unit coordinate onto `[0, 1]`.
    pub fn to_unit(&self, v: f64) -> f64 {
        (v - self.lower) / (self.upper - self.lower)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }

    fn snap(&self, v: f64) -> f64 {
        if self.integer {
            v.round().clamp(self.lower.ceil(), self.upper.floor())
        } else {
            v
        }
    }
}

/// Names of the seven dimensions, in column order.
pub const KL_NAMES: [&str; 7] = [
    "log10_gamma",
    "log10_sigma0",
    "steps",
    "features",
    "mc_samples",
    "log10_lr",
    "mu0",
];
pub const RENYI_NAMES: [&str; 7] = [
    "alpha",
    "log10_sigma0",
    "steps",
    "features",
    "mc_samples",
    "log10_lr",
    "mu0",
];

/// The hyperparameter box for one divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub divergence: Divergence,
    pub dims: Vec<Dimension>,
}

impl DesignSpace {
    /// The full box studied for `divergence`.
    pub fn standard(divergence: Divergence) -> Self {
        let first = match divergence {
            Divergence::Kl => Dimension::new("log10_gamma", -1.0, 1.0, Scale::Log10, false),
            Divergence::AlphaRenyi => Dimension::new("alpha", 0.0, 1.0, Scale::Linear, false),
        };
        let dims = vec![
            first,
            Dimension::new("log10_sigma0", -0.5, 0.5, Scale::Log10, false),
            Dimension::new("steps", 2000.0, 20000.0, Scale::Linear, true),
            Dimension::new("features", 2.0, 100.0, Scale::Linear, true),
            Dimension::new("mc_samples", 1.0, 25.0, Scale::Linear, true),
            Dimension::new("log10_lr", -3.3, -0.3, Scale::Log10, false),
            Dimension::new("mu0", -2.0, 2.0, Scale::Linear, false),
        ];
        Self { divergence, dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    /// Replace the upper bound of `name` (design units). Used to cap
    /// expensive dimensions for small-budget studies.
    pub fn with_upper(mut self, name: &str, upper: f64) -> Result<Self> {
        let i = self
            .index_of(name)
            .ok_or_else(|| config(format!("unknown design dimension `{name}`")))?;
        let d = &mut self.dims[i];
        if !(upper > d.lower) {
            return Err(config(format!(
                "upper bound {upper} for `{name}` is not above the lower bound {}",
                d.lower
            )));
        }
        d.upper = upper;
        Ok(self)
    }

    /// Map a row of design-unit coordinates onto `[0, 1]^d`.
    pub fn to_unit(&self, row: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(row)
            .map(|(d, v)| d.to_unit(*v))
            .collect()
    }

    /// Map a unit-cube point to design units, rounding integer dimensions.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(u)
            .map(|(d, v)| d.snap(d.from_unit(*v)))
            .collect()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim() {
            return Err(contract(format!(
                "design row has {} columns, expected {}",
                row.len(),
                self.dim()
            )));
        }
        for (d, &v) in self.dims.iter().zip(row) {
            let tol = 1e-9 * (d.upper - d.lower);
            if !(v >= d.lower - tol && v <= d.upper + tol) {
                return Err(contract(format!(
                    "`{}` = {v} outside [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
        }
        Ok(())
    }

    /// Build the hyperparameter configuration described by one row.
    pub fn to_config(&self, row: &[f64]) -> Result<HyperConfig> {
        self.check_row(row)?;
        let get = |name: &str| {
            let i = self
                .index_of(name)
                .ok_or_else(|| contract(format!("design space lacks `{name}`")))?;
            Ok::<f64, Error>(self.dims[i].natural(self.dims[i].snap(row[i])))
        };
        let objective = match self.divergence {
            Divergence::Kl => Objective::Kl {
                gamma: get("log10_gamma")?,
            },
            Divergence::AlphaRenyi => Objective::AlphaRenyi {
                alpha: get("alpha")?,
            },
        };
        let cfg = HyperConfig {
            objective,
            prior_mean: get("mu0")?,
            prior_sd: get("log10_sigma0")?,
            optimizer_steps: get("steps")? as usize,
            nn_features: get("features")? as usize,
            mc_samples: get("mc_samples")? as usize,
            learning_rate: get("log10_lr")?,
        };
        cfg.validate()
            .map_err(|e| contract(format!("design row gives an invalid configuration: {e}")))?;
        Ok(cfg)
    }
}

/// `n` Latin hypercube points in `[0, 1]^d`, row-major.
pub fn lhs_unit(n: usize, d: usize, rng: &mut Rng) -> Vec<f64> {
    let mut out = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            out[i * d + j] = (stratum as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    out
}

/// A sampled design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub space: DesignSpace,
    pub seed: u64,
    /// Row-major `n × d` pre-rounding coordinates in `[0, 1)`.
    pub unit: Vec<f64>,
    /// Row-major `n × d` coordinates in design units.
    pub rows: Vec<f64>,
}

impl DesignMatrix {
    pub fn len(&self) -> usize {
        self.rows.len() / self.space.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.space.dim();
        &self.rows[i * d..(i + 1) * d]
    }

    /// Write `index`, then every dimension in design units, then the
    /// natural-scale companion of each log-scaled dimension.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        header.extend(self.space.dims.iter().map(|d| d.name.clone()));
        for d in self.space.dims.iter().filter(|d| d.scale == Scale::Log10) {
            header.push(d.name.trim_start_matches("log10_").to_string());
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let row = self.row(i);
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            for (d, v) in self
                .space
                .dims
                .iter()
                .zip(row)
                .filter(|(d, _)| d.scale == Scale::Log10)
            {
                rec.push(format!("{}", d.natural(*v)));
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }

    /// Read the design-unit columns written by [`write_csv`](Self::write_csv).
    /// Pre-rounding coordinates are not stored, so `unit` is recomputed
    /// from the rows.
    pub fn read_csv<R: Read>(input: R, space: DesignSpace, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let cols: Vec<usize> = space
            .dims
            .iter()
            .map(|d| {
                header
                    .iter()
                    .position(|h| h == d.name)
                    .ok_or_else(|| contract(format!("design file lacks column `{}`", d.name)))
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let idx: usize = rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| contract(format!("design row {line}: bad index")))?;
            if idx != line {
                return Err(contract(format!("design rows out of order at line {line}")));
            }
            for &c in &cols {
                let v: f64 = rec
                    .get(c)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| contract(format!("design row {line}: unparsable value")))?;
                rows.push(v);
            }
            space.check_row(&rows[rows.len() - space.dim()..])?;
        }
        let unit = rows
            .chunks(space.dim().max(1))
            .flat_map(|r| space.to_unit(r))
            .collect();
        Ok(Self {
            space,
            seed,
            unit,
            rows,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => contract(format!("malformed CSV: {other:?}")),
    }
}

/// Latin hypercube sample of `n` points over `space`. Deterministic in `seed`.
pub fn lhs(space: &DesignSpace, n: usize, seed: u64) -> Result<DesignMatrix> {
    if n == 0 {
        return Err(config("a design needs at least one point"));
    }
    let d = space.dim();
    let mut rng = rng_from_seed(seed);
    let unit = lhs_unit(n, d, &mut rng);
    let rows = unit.chunks(d).flat_map(|u| space.from_unit(u)).collect();
    Ok(DesignMatrix {
        space: space.clone(),
        seed,
        unit,
        rows,
    })
}

/// One validated configuration per design row.
pub fn to_configs(design: &DesignMatrix, divergence: Divergence) -> Result<Vec<HyperConfig>> {
    if design.space.divergence != divergence {
        return Err(contract(format!(
            "design was drawn for {} but {divergence} was requested",
            design.space.divergence
        )));
    }
    (0..design.len())
        .map(|i| design.space.to_config(design.row(i)))
        .collect()
}
