use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hypersens_core::bnn::{Divergence, DEFAULT_LEVEL, DEFAULT_PREDICTIVE_DRAWS};
use hypersens_core::design::DesignSpace;
use hypersens_core::dgm::DgmTag;
use hypersens_core::surrogate::McmcSchedule;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{io_at, HarnessError, Result};

/// Design size of a full-scale study.
pub const FULL_DESIGN_SIZE: usize = 750;

/// Grid, marginal sample and Saltelli base sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub grid: usize,
    pub samples: usize,
    pub base_samples: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            grid: 21,
            samples: 1000,
            base_samples: 4096,
        }
    }
}

/// Everything one (divergence, DGM) study needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(with = "text")]
    pub divergence: Divergence,
    #[serde(with = "text")]
    pub dgm: DgmTag,
    pub design_size: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Miscoverage level of the prediction intervals.
    pub level: f64,
    pub predictive_draws: usize,
    /// Share one dataset across all design rows instead of drawing a
    /// fresh one per row.
    pub fixed_data: bool,
    /// Upper bounds replacing the standard ones for `features` / `steps`.
    pub max_features: Option<usize>,
    pub max_steps: Option<usize>,
    pub surrogate: McmcSchedule,
    pub sensitivity: SensitivityConfig,
    pub output: PathBuf,
    /// Worker threads for row fitting; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            divergence: Divergence::Kl,
            dgm: DgmTag::R1,
            design_size: FULL_DESIGN_SIZE,
            n_train: 500,
            n_test: 500,
            seed: 1,
            level: DEFAULT_LEVEL,
            predictive_draws: DEFAULT_PREDICTIVE_DRAWS,
            fixed_data: false,
            max_features: None,
            max_steps: None,
            surrogate: McmcSchedule::default(),
            sensitivity: SensitivityConfig::default(),
            output: PathBuf::from("out"),
            workers: 0,
        }
    }
}

mod text {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(
        v: &T,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string().to_ascii_lowercase())
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.design_size == 0 {
            return bad("design_size must be positive".into());
        }
        if self.n_train < 2 || self.n_test < 1 {
            return bad(format!(
                "need n_train ≥ 2 and n_test ≥ 1, got {} and {}",
                self.n_train, self.n_test
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.predictive_draws < 100 {
            return bad(format!(
                "predictive_draws must be at least 100, got {}",
                self.predictive_draws
            ));
        }
        self.surrogate.validate()?;
        let s = self.sensitivity;
        if s.grid < 5 || s.samples < 100 || s.base_samples < 1000 {
            return bad(format!(
                "sensitivity needs grid ≥ 5, samples ≥ 100, base_samples ≥ 1000, got {}, {}, {}",
                s.grid, s.samples, s.base_samples
            ));
        }
        self.space()?;
        Ok(())
    }

    /// The design box, with the configured caps applied.
    pub fn space(&self) -> Result<DesignSpace> {
        let mut space = DesignSpace::standard(self.divergence);
        for (name, cap) in [("features", self.max_features), ("steps", self.max_steps)] {
            if let Some(cap) = cap {
                let upper = space.dims[space.index_of(name).expect("standard dimension")].upper;
                if cap as f64 > upper {
                    return Err(HarnessError::Config(format!(
                        "cap {cap} on `{name}` exceeds its range ({upper})"
                    )));
                }
                space = space.with_upper(name, cap as f64)?;
            }
        }
        Ok(space)
    }

    /// Short label such as `kl_r1`.
    pub fn study_name(&self) -> String {
        format!("{}_{}", self.divergence, self.dgm).to_ascii_lowercase()
    }

    /// SHA-256 over every setting that can change a result; the output
    /// directory and worker count are left out.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.output = PathBuf::new();
        key.workers = 0;
        let json = serde_json::to_string(&key).expect("configuration serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn design_path(&self) -> PathBuf {
        self.output.join("design.csv")
    }

    pub fn shard_dir(&self) -> PathBuf {
        self.output.join("shards")
    }

    pub fn results_path(&self) -> PathBuf {
        self.output.join("results.csv")
    }

    pub fn analysis_dir(&self, metric: &str) -> PathBuf {
        self.output.join(format!("analysis_{metric}"))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(io_at(path))?;
    Ok(hex(&Sha256::digest(&bytes)))
}
