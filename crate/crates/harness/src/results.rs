use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use hypersens_core::bnn::Divergence;
use hypersens_core::design::DesignSpace;
use hypersens_core::dgm::DgmTag;
use serde::Serialize;

use crate::error::{csv_at, io_at, HarnessError, Result};

pub const RESULTS_HEADER: [&str; 15] = [
    "index",
    "divergence",
    "dgm",
    "seed",
    "log10_gamma",
    "alpha",
    "log10_sigma0",
    "steps",
    "features",
    "mc_samples",
    "log10_lr",
    "mu0",
    "rmse",
    "interval_score",
    "diverged",
];

/// One fitted design row. Hyperparameters are kept in design units; the
/// divergence-specific one not in use is `None` and written as an empty
/// cell. Diverged fits carry `NaN` metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub index: usize,
    pub divergence: Divergence,
    pub dgm: DgmTag,
    pub seed: u64,
    pub log10_gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub log10_sigma0: f64,
    pub steps: usize,
    pub features: usize,
    pub mc_samples: usize,
    pub log10_lr: f64,
    pub mu0: f64,
    pub rmse: f64,
    pub interval_score: f64,
    pub diverged: bool,
}

impl ResultRow {
    pub fn from_design(
        index: usize,
        space: &DesignSpace,
        row: &[f64],
        dgm: DgmTag,
        seed: u64,
    ) -> Self {
        let get = |name: &str| space.index_of(name).map(|i| row[i]);
        Self {
            index,
            divergence: space.divergence,
            dgm,
            seed,
            log10_gamma: get("log10_gamma"),
            alpha: get("alpha"),
            log10_sigma0: get("log10_sigma0").unwrap_or(f64::NAN),
            steps: get("steps").unwrap_or(0.0) as usize,
            features: get("features").unwrap_or(0.0) as usize,
            mc_samples: get("mc_samples").unwrap_or(0.0) as usize,
            log10_lr: get("log10_lr").unwrap_or(f64::NAN),
            mu0: get("mu0").unwrap_or(f64::NAN),
            rmse: f64::NAN,
            interval_score: f64::NAN,
            diverged: true,
        }
    }

    /// Hyperparameters in the column order of `space`.
    pub fn design_row(&self, space: &DesignSpace) -> Result<Vec<f64>> {
        space
            .names()
            .iter()
            .map(|&n| {
                let v = match n {
                    "log10_gamma" => self.log10_gamma,
                    "alpha" => self.alpha,
                    "log10_sigma0" => Some(self.log10_sigma0),
                    "steps" => Some(self.steps as f64),
                    "features" => Some(self.features as f64),
                    "mc_samples" => Some(self.mc_samples as f64),
                    "log10_lr" => Some(self.log10_lr),
                    "mu0" => Some(self.mu0),
                    _ => None,
                };
                v.ok_or_else(|| {
                    HarnessError::Data(format!("row {} has no value for `{n}`", self.index))
                })
            })
            .collect()
    }

    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.index.to_string(),
            self.divergence.to_string(),
            self.dgm.to_string(),
            self.seed.to_string(),
            opt(self.log10_gamma),
            opt(self.alpha),
            self.log10_sigma0.to_string(),
            self.steps.to_string(),
            self.features.to_string(),
            self.mc_samples.to_string(),
            self.log10_lr.to_string(),
            self.mu0.to_string(),
            self.rmse.to_string(),
            self.interval_score.to_string(),
            u8::from(self.diverged).to_string(),
        ]
    }

    fn parse(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |col: &str| HarnessError::Data(format!("line {line}: bad `{col}` value"));
        let field = |i: usize| rec.get(i).unwrap_or("");
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|_| bad(RESULTS_HEADER[i]))
        };
        let real = |i: usize| field(i).parse::<f64>().map_err(|_| bad(RESULTS_HEADER[i]));
        let opt = |i: usize| match field(i) {
            "" => Ok(None),
            s => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad(RESULTS_HEADER[i])),
        };
        Ok(Self {
            index: int(0)?,
            divergence: field(1).parse().map_err(|_| bad("divergence"))?,
            dgm: field(2).parse().map_err(|_| bad("dgm"))?,
            seed: field(3).parse().map_err(|_| bad("seed"))?,
            log10_gamma: opt(4)?,
            alpha: opt(5)?,
            log10_sigma0: real(6)?,
            steps: int(7)?,
            features: int(8)?,
            mc_samples: int(9)?,
            log10_lr: real(10)?,
            mu0: real(11)?,
            rmse: real(12)?,
            interval_score: real(13)?,
            diverged: match field(14) {
                "0" => false,
                "1" => true,
                _ => return Err(bad("diverged")),
            },
        })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(csv_at(path))?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(HarnessError::Data(format!(
            "{}: unexpected header `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_at(path))?;
        rows.push(ResultRow::parse(&rec, i + 2).map_err(|e| match e {
            HarnessError::Data(m) => HarnessError::Data(format!("{}: {m}", path.display())),
            other => other,
        })?);
    }
    Ok(rows)
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(RESULTS_HEADER).map_err(csv_at(path))?;
    for row in rows {
        w.write_record(row.record()).map_err(csv_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

/// Appends rows to a shard, writing the header first when the file is new.
pub struct ShardWriter {
    w: csv::Writer<File>,
    path: std::path::PathBuf,
}

impl ShardWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = !path.exists() || std::fs::metadata(path).map_err(io_at(path))?.len() == 0;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_at(path))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(file);
        if fresh {
            w.write_record(RESULTS_HEADER).map_err(csv_at(path))?;
            w.flush().map_err(io_at(path))?;
        }
        Ok(Self {
            w,
            path: path.to_path_buf(),
        })
    }

    pub fn append(&mut self, row: &ResultRow) -> Result<()> {
        self.w
            .write_record(row.record())
            .map_err(csv_at(&self.path))?;
        self.w.flush().map_err(io_at(&self.path))
    }
}

/// Sidecar `<file>.manifest.json` tying an output to its configuration.
pub fn write_manifest<T: Serialize>(file: &Path, body: &T) -> Result<()> {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    let path = file.with_file_name(name);
    let mut f = File::create(&path).map_err(io_at(&path))?;
    let text = serde_json::to_string_pretty(body).expect("manifest serializes");
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(io_at(&path))
}
