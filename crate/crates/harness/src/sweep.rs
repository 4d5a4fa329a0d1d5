//! Design generation and row fitting.

use std::collections::BTreeSet;
use std::fs::File;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use hypersens_core::bnn::{posterior_predictive, train};
use hypersens_core::design::{lhs, DesignMatrix, DesignSpace};
use hypersens_core::dgm::{generate, standardize};
use hypersens_core::metrics::score;
use hypersens_core::rng::derive_seed;
use hypersens_core::Error as CoreError;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{io_at, HarnessError, Result};
use crate::results::{read_results, write_manifest, ResultRow, ShardWriter};

/// Seed tag of the dataset shared by every row under `fixed_data`.
const SHARED_DATA_TAG: u64 = u64::MAX;
/// Seed tag of the design itself.
const DESIGN_TAG: u64 = u64::MAX - 1;

pub fn design_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.seed, DESIGN_TAG)
}

/// Write `design.csv` and its manifest; returns the design path.
pub fn cmd_design(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let space = cfg.space()?;
    let design = lhs(&space, cfg.design_size, design_seed(cfg))?;
    std::fs::create_dir_all(&cfg.output).map_err(io_at(&cfg.output))?;
    let path = cfg.design_path();
    let file = File::create(&path).map_err(io_at(&path))?;
    design
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| match e {
            CoreError::Io(m) => HarnessError::Io {
                path: path.clone(),
                source: std::io::Error::other(m),
            },
            other => other.into(),
        })?;
    write_manifest(
        &path,
        &json!({
            "kind": "design",
            "config_hash": cfg.hash(),
            "study": cfg.study_name(),
            "base_seed": cfg.seed,
            "design_seed": design.seed,
            "rows": design.len(),
            "bounds": space.dims,
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )?;
    log::info!("wrote {} design rows to {}", design.len(), path.display());
    Ok(path)
}

pub fn load_design(cfg: &ExperimentConfig) -> Result<DesignMatrix> {
    let path = cfg.design_path();
    let file = File::open(&path).map_err(io_at(&path))?;
    let design = DesignMatrix::read_csv(
        std::io::BufReader::new(file),
        cfg.space()?,
        design_seed(cfg),
    )?;
    if design.len() != cfg.design_size {
        return Err(HarnessError::Data(format!(
            "{} has {} rows but the configuration asks for {}",
            path.display(),
            design.len(),
            cfg.design_size
        )));
    }
    Ok(design)
}

/// Fit and score one design row. Diverged training gives a row with `NaN`
/// metrics and the diverged flag set; any other failure is returned.
pub fn evaluate_row(
    cfg: &ExperimentConfig,
    space: &DesignSpace,
    row: &[f64],
    index: usize,
) -> Result<ResultRow> {
    let hyper = space.to_config(row)?;
    let row_seed = derive_seed(cfg.seed, index as u64);
    let data_seed = if cfg.fixed_data {
        derive_seed(cfg.seed, SHARED_DATA_TAG)
    } else {
        derive_seed(row_seed, 1)
    };
    let (tr, te) = generate(cfg.dgm, cfg.n_train, cfg.n_test, data_seed)?;
    let data = standardize(&tr, &te)?;
    let mut out = ResultRow::from_design(index, space, row, cfg.dgm, row_seed);
    match train(&data, &hyper, derive_seed(row_seed, 2)) {
        Ok(q) => {
            let s = posterior_predictive(
                &q,
                &data.test_inputs,
                data.std_noise_var,
                cfg.predictive_draws,
                cfg.level,
                derive_seed(row_seed, 3),
            )?;
            let (rmse, is) = score(&s, &data.test_responses)?;
            if rmse.is_finite() && is.is_finite() {
                out.rmse = rmse;
                out.interval_score = is;
                out.diverged = false;
            }
        }
        Err(CoreError::Diverged { step }) => log::warn!("row {index} diverged at step {step}"),
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

/// Parse `A..B` (half open).
pub fn parse_rows(text: &str) -> Result<Range<usize>> {
    let bad = || HarnessError::Config(format!("row range must look like A..B, got `{text}`"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let (a, b): (usize, usize) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a >= b {
        return Err(HarnessError::Config(format!("empty row range {a}..{b}")));
    }
    Ok(a..b)
}

pub fn shard_path(cfg: &ExperimentConfig, rows: &Range<usize>) -> PathBuf {
    cfg.shard_dir()
        .join(format!("rows_{:05}_{:05}.csv", rows.start, rows.end))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub shard: PathBuf,
    pub computed: usize,
    pub skipped: usize,
    pub diverged: usize,
}

/// Fit design rows `rows` into a shard file. Rows already present in the
/// shard are skipped, so an interrupted run can simply be restarted.
pub fn cmd_run(
    cfg: &ExperimentConfig,
    rows: Range<usize>,
    shard: Option<&Path>,
) -> Result<RunSummary> {
    cfg.validate()?;
    let design = load_design(cfg)?;
    if rows.end > design.len() {
        return Err(HarnessError::Config(format!(
            "rows {}..{} exceed the design size {}",
            rows.start,
            rows.end,
            design.len()
        )));
    }
    let path = shard
        .map(Path::to_path_buf)
        .unwrap_or_else(|| shard_path(cfg, &rows));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    let done: BTreeSet<usize> = if path.exists() {
        let existing = read_results(&path)?;
        if let Some(r) = existing.iter().find(|r| !rows.contains(&r.index)) {
            return Err(HarnessError::Data(format!(
                "{} holds row {} outside {}..{}",
                path.display(),
                r.index,
                rows.start,
                rows.end
            )));
        }
        existing.iter().map(|r| r.index).collect()
    } else {
        BTreeSet::new()
    };
    let todo: Vec<usize> = rows.clone().filter(|i| !done.contains(i)).collect();
    log::info!(
        "{}: {} rows to fit, {} already present",
        path.display(),
        todo.len(),
        done.len()
    );
    let mut writer = ShardWriter::open(&path)?;
    write_manifest(
        &path,
        &json!({
            "kind": "shard",
            "config_hash": cfg.hash(),
            "study": cfg.study_name(),
            "rows": [rows.start, rows.end],
        }),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let space = &design.space;
    let (tx, rx) = mpsc::channel::<Result<ResultRow>>();
    let mut summary = RunSummary {
        shard: path.clone(),
        computed: 0,
        skipped: done.len(),
        diverged: 0,
    };
    let mut first_error = None;
    let abort = AtomicBool::new(false);
    std::thread::scope(|scope| {
        let design = &design;
        let todo = &todo;
        let abort = &abort;
        scope.spawn(move || {
            pool.install(|| {
                todo.par_iter().for_each_with(tx, |tx, &i| {
                    if !abort.load(Ordering::Relaxed) {
                        let _ = tx.send(evaluate_row(cfg, space, design.row(i), i));
                    }
                });
            })
        });
        for res in rx {
            match res.and_then(|row| writer.append(&row).map(|_| row)) {
                Ok(row) => {
                    summary.computed += 1;
                    summary.diverged += usize::from(row.diverged);
                    log::debug!(
                        "row {} rmse {} is {}",
                        row.index,
                        row.rmse,
                        row.interval_score
                    );
                }
                Err(e) if first_error.is_none() => {
                    abort.store(true, Ordering::Relaxed);
                    first_error = Some(e);
                }
                Err(_) => {}
            }
        }
    });
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
