//! The four (divergence × data mechanism) studies end to end.

use std::path::PathBuf;

use hypersens_core::bnn::Divergence;
use hypersens_core::dgm::DgmTag;
use hypersens_core::sensitivity::SensitivityReport;

use crate::analyze::{cmd_analyze, AnalyzeOptions, Metric};
use crate::config::{ExperimentConfig, FULL_DESIGN_SIZE};
use crate::error::{csv_at, io_at, HarnessError, Result};
use crate::merge::cmd_merge;
use crate::sweep::{cmd_design, cmd_run};

pub const DEFAULT_MAX_FEATURES: usize = 40;
pub const DEFAULT_MAX_STEPS: usize = 8000;

pub const ALL_STUDIES: [(Divergence, DgmTag); 4] = [
    (Divergence::Kl, DgmTag::R1),
    (Divergence::Kl, DgmTag::R2),
    (Divergence::AlphaRenyi, DgmTag::R1),
    (Divergence::AlphaRenyi, DgmTag::R2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOptions {
    /// Fraction of the full 750-row design.
    pub scale: f64,
    pub studies: Vec<(Divergence, DgmTag)>,
    /// Cap `features` and `steps` (defaults 40 and 8000 unless the base
    /// configuration sets its own caps).
    pub caps: bool,
}

impl Default for ReplicateOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            studies: ALL_STUDIES.to_vec(),
            caps: true,
        }
    }
}

/// Parse a study label such as `kl_r1`.
pub fn parse_study(text: &str) -> Result<(Divergence, DgmTag)> {
    let (d, g) = text
        .split_once(['_', '-', ':'])
        .ok_or_else(|| HarnessError::Config(format!("study must look like kl_r1, got `{text}`")))?;
    Ok((d.parse()?, g.parse()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub config: ExperimentConfig,
    pub rmse: SensitivityReport,
    pub is: SensitivityReport,
}

impl StudyOutcome {
    pub fn report(&self, metric: Metric) -> &SensitivityReport {
        match metric {
            Metric::Rmse => &self.rmse,
            Metric::IntervalScore => &self.is,
        }
    }
}

/// Configuration of one study under `base`, written to
/// `<base.output>/<study>`.
pub fn study_config(
    base: &ExperimentConfig,
    opts: &ReplicateOptions,
    study: (Divergence, DgmTag),
) -> Result<ExperimentConfig> {
    if !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(HarnessError::Config(format!(
            "scale must be positive, got {}",
            opts.scale
        )));
    }
    let mut cfg = base.clone();
    cfg.divergence = study.0;
    cfg.dgm = study.1;
    cfg.design_size = ((FULL_DESIGN_SIZE as f64 * opts.scale).round() as usize).max(1);
    if opts.caps {
        cfg.max_features = Some(base.max_features.unwrap_or(DEFAULT_MAX_FEATURES));
        cfg.max_steps = Some(base.max_steps.unwrap_or(DEFAULT_MAX_STEPS));
    } else {
        cfg.max_features = None;
        cfg.max_steps = None;
    }
    cfg.output = base.output.join(cfg.study_name());
    cfg.validate()?;
    Ok(cfg)
}

/// Design, fit every row, merge and analyze both metrics for each study.
/// Existing shard rows are reused, so an interrupted replication resumes.
pub fn replicate_paper(
    base: &ExperimentConfig,
    opts: &ReplicateOptions,
) -> Result<Vec<StudyOutcome>> {
    let mut out = Vec::new();
    for &study in &opts.studies {
        let cfg = study_config(base, opts, study)?;
        log::info!("study {} with {} rows", cfg.study_name(), cfg.design_size);
        cmd_design(&cfg)?;
        let run = cmd_run(&cfg, 0..cfg.design_size, None)?;
        log::info!(
            "{}: {} fitted, {} diverged",
            cfg.study_name(),
            run.computed + run.skipped,
            run.diverged
        );
        let merged = cmd_merge(&cfg, &[run.shard], None)?;
        let rmse = cmd_analyze(&cfg, &merged.path, AnalyzeOptions::new(Metric::Rmse))?;
        let is = cmd_analyze(
            &cfg,
            &merged.path,
            AnalyzeOptions::new(Metric::IntervalScore),
        )?;
        out.push(StudyOutcome {
            config: cfg,
            rmse,
            is,
        });
    }
    write_summaries(base, &out)?;
    Ok(out)
}

/// `summary_<divergence>.csv`: one row per hyperparameter, one `S(T)`
/// column per study and metric.
pub fn write_summaries(base: &ExperimentConfig, outcomes: &[StudyOutcome]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for div in [Divergence::Kl, Divergence::AlphaRenyi] {
        let group: Vec<&StudyOutcome> = outcomes
            .iter()
            .filter(|o| o.config.divergence == div)
            .collect();
        let Some(first) = group.first() else { continue };
        let path = base.output.join(format!("summary_{div}.csv"));
        std::fs::create_dir_all(&base.output).map_err(io_at(&base.output))?;
        let mut w = csv::Writer::from_path(&path).map_err(csv_at(&path))?;
        let mut header = vec!["parameter".to_string()];
        for o in &group {
            for m in [Metric::Rmse, Metric::IntervalScore] {
                header.push(format!("{}_{m}", o.config.study_name()));
            }
        }
        w.write_record(&header).map_err(csv_at(&path))?;
        for (j, name) in first.rmse.indices.names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            for o in &group {
                rec.push(o.rmse.cell(j));
                rec.push(o.is.cell(j));
            }
            w.write_record(&rec).map_err(csv_at(&path))?;
        }
        w.flush().map_err(io_at(&path))?;
        paths.push(path);
    }
    Ok(paths)
}
