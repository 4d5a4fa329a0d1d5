//! Surrogate fitting and sensitivity analysis of a results table.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hypersens_core::design::DesignSpace;
use hypersens_core::rng::derive_seed;
use hypersens_core::sensitivity::{
    main_effects, sobol_indices, Axis, ConstantSurface, MainEffectCurve, MainEffectOptions,
    SensitivityIndices, SensitivityReport,
};
use hypersens_core::stats::quantile;
use hypersens_core::surrogate::{fit, GpPredictor, SurrogateTrainingSet};
use hypersens_core::Error as CoreError;
use serde_json::json;

use crate::config::{sha256_file, ExperimentConfig};
use crate::error::{io_at, HarnessError, Result};
use crate::plot::write_plots;
use crate::results::{read_results, write_manifest, ResultRow};

/// Fewest usable rows accepted for surrogate fitting.
pub const MIN_ROWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    IntervalScore,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rmse => "rmse",
            Metric::IntervalScore => "is",
        })
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(Metric::Rmse),
            "is" | "interval_score" => Ok(Metric::IntervalScore),
            other => Err(HarnessError::Config(format!(
                "unknown metric `{other}` (expected rmse or is)"
            ))),
        }
    }
}

impl Metric {
    fn value(self, row: &ResultRow) -> f64 {
        match self {
            Metric::Rmse => row.rmse,
            Metric::IntervalScore => row.interval_score,
        }
    }

    fn tag(self) -> u64 {
        match self {
            Metric::Rmse => 0x524d_5345,
            Metric::IntervalScore => 0x4953,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub metric: Metric,
    /// Keep diverged rows, with the metric set to the 99th percentile of
    /// the finite values.
    pub include_diverged: bool,
    /// Fit the interval score as is rather than `log(1 + IS − min IS)`.
    pub raw_is: bool,
}

impl AnalyzeOptions {
    pub fn new(metric: Metric) -> Self {
        Self {
            metric,
            include_diverged: false,
            raw_is: false,
        }
    }
}

/// Surrogate inputs and response extracted from a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    /// Row-major design-unit coordinates.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub transform: String,
    pub excluded: usize,
    pub capped: usize,
}

pub fn response(rows: &[ResultRow], space: &DesignSpace, opts: AnalyzeOptions) -> Result<Response> {
    let finite: Vec<f64> = rows
        .iter()
        .filter(|r| !r.diverged)
        .map(|r| opts.metric.value(r))
        .collect();
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::Data(
            "a non-diverged row has a non-finite metric".into(),
        ));
    }
    let cap = if finite.is_empty() {
        f64::NAN
    } else {
        quantile(&finite, 0.99)
    };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let (mut excluded, mut capped) = (0, 0);
    for r in rows {
        let v = if !r.diverged {
            opts.metric.value(r)
        } else if opts.include_diverged && cap.is_finite() {
            capped += 1;
            cap
        } else {
            excluded += 1;
            continue;
        };
        x.extend(r.design_row(space)?);
        y.push(v);
    }
    if y.len() < MIN_ROWS {
        return Err(HarnessError::Data(format!(
            "sensitivity analysis needs at least {MIN_ROWS} usable rows, found {}",
            y.len()
        )));
    }
    let transform = if opts.metric == Metric::IntervalScore && !opts.raw_is {
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        y.iter_mut().for_each(|v| *v = (1.0 + *v - lo).ln());
        format!("log(1 + is - {lo})")
    } else {
        "identity".to_string()
    };
    Ok(Response {
        x,
        y,
        transform,
        excluded,
        capped,
    })
}

/// Main effects and Sobol indices of a response over `space`. A constant
/// response yields flat curves and undefined indices.
pub fn sensitivity(
    cfg: &ExperimentConfig,
    space: &DesignSpace,
    resp: &Response,
    seed: u64,
    metadata: &mut BTreeMap<String, String>,
) -> Result<(Vec<MainEffectCurve>, SensitivityIndices)> {
    let d = space.dim();
    let names: Vec<String> = space.names().iter().map(|s| s.to_string()).collect();
    let axes = Axis::from_space(space);
    let opts = MainEffectOptions {
        grid: cfg.sensitivity.grid,
        samples: cfg.sensitivity.samples,
    };
    let lower: Vec<f64> = space.dims.iter().map(|d| d.lower).collect();
    let upper: Vec<f64> = space.dims.iter().map(|d| d.upper).collect();
    let (me_seed, sobol_seed) = (derive_seed(seed, 1), derive_seed(seed, 2));
    match SurrogateTrainingSet::new(&resp.x, d, &resp.y, &lower, &upper) {
        Ok(train) => {
            let post = fit(&train, cfg.surrogate, derive_seed(seed, 0))?;
            let preds = post
                .draws
                .iter()
                .map(|s| GpPredictor::new(s, &train))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let curves = main_effects(&preds, &axes, opts, me_seed)?
                .iter()
                .map(|c| c.map_affine(train.y_scale, train.y_center))
                .collect();
            let indices = sobol_indices(&preds, &names, cfg.sensitivity.base_samples, sobol_seed)?;
            metadata.insert("surrogate_draws".into(), post.draws.len().to_string());
            metadata.insert(
                "surrogate_acceptance".into(),
                format!("{:.4}", post.acceptance_rate),
            );
            Ok((curves, indices))
        }
        Err(CoreError::DegenerateData(_)) => {
            log::warn!("constant response; indices are undefined");
            metadata.insert("constant_response".into(), resp.y[0].to_string());
            let c = ConstantSurface {
                dim: d,
                value: resp.y[0],
            };
            Ok((
                main_effects(&[c], &axes, opts, me_seed)?,
                sobol_indices(&[c], &names, cfg.sensitivity.base_samples, sobol_seed)?,
            ))
        }
        Err(e) => Err(e.into()),
    }
}

/// Fit the surrogate to one metric of a merged results table and write
/// `report.json`, `indices.csv`, per-input curve tables and plots into the
/// analysis directory.
pub fn cmd_analyze(
    cfg: &ExperimentConfig,
    results: &Path,
    opts: AnalyzeOptions,
) -> Result<SensitivityReport> {
    cfg.validate()?;
    let space = cfg.space()?;
    let rows = read_results(results)?;
    if let Some(r) = rows
        .iter()
        .find(|r| r.divergence != cfg.divergence || r.dgm != cfg.dgm)
    {
        return Err(HarnessError::Config(format!(
            "row {} is from study {}_{} but the configuration describes {}",
            r.index,
            r.divergence,
            r.dgm,
            cfg.study_name()
        )));
    }
    let resp = response(&rows, &space, opts)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("config_hash".into(), cfg.hash());
    metadata.insert("results_sha256".into(), sha256_file(results)?);
    metadata.insert("study".into(), cfg.study_name());
    metadata.insert("metric".into(), opts.metric.to_string());
    metadata.insert("transform".into(), resp.transform.clone());
    metadata.insert("rows_used".into(), resp.y.len().to_string());
    metadata.insert("rows_excluded".into(), resp.excluded.to_string());
    metadata.insert("rows_capped".into(), resp.capped.to_string());
    let seed = derive_seed(cfg.seed, opts.metric.tag());
    let (curves, indices) = sensitivity(cfg, &space, &resp, seed, &mut metadata)?;
    let report = SensitivityReport::new(curves, indices, metadata)?;
    write_report(cfg, &report, &cfg.analysis_dir(&opts.metric.to_string()))?;
    Ok(report)
}

pub fn write_report(cfg: &ExperimentConfig, report: &SensitivityReport, dir: &Path) -> Result<()> {
    let curve_dir = dir.join("curves");
    std::fs::create_dir_all(&curve_dir).map_err(io_at(&curve_dir))?;
    let json_path = dir.join("report.json");
    std::fs::write(&json_path, report.to_json()? + "\n").map_err(io_at(&json_path))?;
    let index_path = dir.join("indices.csv");
    report.write_index_csv(BufWriter::new(
        File::create(&index_path).map_err(io_at(&index_path))?,
    ))?;
    let manifest = json!({ "kind": "indices", "config_hash": cfg.hash(), "report": "report.json" });
    write_manifest(&index_path, &manifest)?;
    for (j, c) in report.curves.iter().enumerate() {
        let p: PathBuf = curve_dir.join(format!("{}.csv", c.name));
        report.write_curve_csv(j, BufWriter::new(File::create(&p).map_err(io_at(&p))?))?;
    }
    write_plots(report, &dir.join("plots"))?;
    Ok(())
}
