use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hypersens_core::sensitivity::SensitivityReport;

use crate::analyze::{cmd_analyze, AnalyzeOptions, Metric};
use crate::config::ExperimentConfig;
use crate::error::{io_at, HarnessError, Result};
use crate::merge::cmd_merge;
use crate::plot::write_plots;
use crate::replicate::{parse_study, replicate_paper, ReplicateOptions, ALL_STUDIES};
use crate::sweep::{cmd_design, cmd_run, parse_rows};

#[derive(Debug, Parser)]
#[command(
    name = "hypersens",
    version,
    about = "BNN hyperparameter sweeps and surrogate sensitivity analysis"
)]
pub struct Cli {
    /// TOML experiment configuration; flags below override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// kl or renyi.
    #[arg(long, global = true)]
    pub divergence: Option<String>,
    /// r1 or r2.
    #[arg(long, global = true)]
    pub dgm: Option<String>,
    #[arg(long = "design-size", global = true)]
    pub design_size: Option<usize>,
    #[arg(long = "n-train", global = true)]
    pub n_train: Option<usize>,
    #[arg(long = "n-test", global = true)]
    pub n_test: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Miscoverage level of prediction intervals.
    #[arg(long, global = true)]
    pub level: Option<f64>,
    #[arg(long = "predictive-draws", global = true)]
    pub predictive_draws: Option<usize>,
    /// Share one dataset across all design rows.
    #[arg(long = "fixed-data", global = true)]
    pub fixed_data: bool,
    #[arg(long = "max-features", global = true)]
    pub max_features: Option<usize>,
    #[arg(long = "max-steps", global = true)]
    pub max_steps: Option<usize>,
    #[arg(long = "mcmc-burn", global = true)]
    pub mcmc_burn: Option<usize>,
    #[arg(long = "mcmc-total", global = true)]
    pub mcmc_total: Option<usize>,
    #[arg(long = "mcmc-thin", global = true)]
    pub mcmc_thin: Option<usize>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "base-samples", global = true)]
    pub base_samples: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw the Latin hypercube design.
    Design,
    /// Fit a range of design rows into a shard.
    Run {
        /// Half-open range `A..B`.
        #[arg(long)]
        rows: String,
        /// Shard file (default `<out>/shards/rows_A_B.csv`).
        #[arg(long)]
        shard: Option<PathBuf>,
    },
    /// Merge shard files into `<out>/results.csv`.
    Merge {
        #[arg(required = true)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit the surrogate and compute main effects and Sobol indices.
    Analyze {
        /// rmse or is.
        #[arg(long)]
        metric: String,
        /// Results table (default `<out>/results.csv`).
        #[arg(long)]
        results: Option<PathBuf>,
        /// Keep diverged rows with the metric capped at the 99th percentile.
        #[arg(long = "include-diverged")]
        include_diverged: bool,
        /// Fit the interval score without the log transform.
        #[arg(long = "raw-is")]
        raw_is: bool,
    },
    /// Redraw the SVG plots of a saved report.
    Plot {
        report: PathBuf,
        #[arg(long = "plot-dir")]
        plot_dir: Option<PathBuf>,
    },
    /// Run all four studies at `750 · scale` rows each.
    ReplicatePaper {
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Restrict to these studies, e.g. `kl_r1,kl_r2`.
        #[arg(long, value_delimiter = ',')]
        studies: Vec<String>,
        /// Use the full `features` and `steps` ranges.
        #[arg(long = "no-caps")]
        no_caps: bool,
    },
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = &self.divergence {
            cfg.divergence = v.parse()?;
        }
        if let Some(v) = &self.dgm {
            cfg.dgm = v.parse()?;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        set! {
            design_size => cfg.design_size,
            n_train => cfg.n_train,
            n_test => cfg.n_test,
            seed => cfg.seed,
            level => cfg.level,
            predictive_draws => cfg.predictive_draws,
            mcmc_burn => cfg.surrogate.burn,
            mcmc_total => cfg.surrogate.total,
            mcmc_thin => cfg.surrogate.thin,
            grid => cfg.sensitivity.grid,
            samples => cfg.sensitivity.samples,
            base_samples => cfg.sensitivity.base_samples,
            out => cfg.output,
            workers => cfg.workers,
        }
        if self.max_features.is_some() {
            cfg.max_features = self.max_features;
        }
        if self.max_steps.is_some() {
            cfg.max_steps = self.max_steps;
        }
        cfg.fixed_data |= self.fixed_data;
        Ok(())
    }
}

pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Design => {
            let p = cmd_design(&cfg)?;
            println!("{}", p.display());
        }
        Command::Run { rows, shard } => {
            let s = cmd_run(&cfg, parse_rows(&rows)?, shard.as_deref())?;
            println!(
                "{}: {} fitted, {} skipped, {} diverged",
                s.shard.display(),
                s.computed,
                s.skipped,
                s.diverged
            );
        }
        Command::Merge { shards, output } => {
            let m = cmd_merge(&cfg, &shards, output.as_deref())?;
            println!("{}: {} rows", m.path.display(), m.rows);
        }
        Command::Analyze {
            metric,
            results,
            include_diverged,
            raw_is,
        } => {
            let opts = AnalyzeOptions {
                metric: metric.parse::<Metric>()?,
                include_diverged,
                raw_is,
            };
            let path = results.unwrap_or_else(|| cfg.results_path());
            let report = cmd_analyze(&cfg, &path, opts)?;
            print_table(&report);
        }
        Command::Plot { report, plot_dir } => {
            let text = std::fs::read_to_string(&report).map_err(io_at(&report))?;
            let parsed = SensitivityReport::from_json(&text)?;
            let dir = plot_dir.unwrap_or_else(|| report.with_file_name("plots"));
            write_plots(&parsed, &dir)?;
            println!("{}", dir.display());
        }
        Command::ReplicatePaper {
            scale,
            studies,
            no_caps,
        } => {
            let studies = if studies.is_empty() {
                ALL_STUDIES.to_vec()
            } else {
                studies
                    .iter()
                    .map(|s| parse_study(s))
                    .collect::<Result<_>>()?
            };
            if studies.is_empty() {
                return Err(HarnessError::Config("no studies selected".into()));
            }
            let opts = ReplicateOptions {
                scale,
                studies,
                caps: !no_caps,
            };
            for o in replicate_paper(&cfg, &opts)? {
                println!("== {} rmse", o.config.study_name());
                print_table(&o.rmse);
                println!("== {} is", o.config.study_name());
                print_table(&o.is);
            }
        }
    }
    Ok(())
}

fn print_table(report: &SensitivityReport) {
    for (j, name) in report.indices.names.iter().enumerate() {
        println!(
            "{name:>14}  {:>12}  argmin {:.4}",
            report.cell(j),
            report.curves[j].argmin
        );
    }
}
