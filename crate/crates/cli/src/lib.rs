//! `voxpd` subcommands: segment recordings, extract the feature table,
//! evaluate classifiers under repeated k-fold, and merge run reports.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use voxpd::features::Grouping;

pub use commands::{cmd_evaluate, cmd_extract, cmd_report, cmd_segment, load_run, RunRecord, Skipped, TuningRecord};
pub use config::{
    CvSettings, EvaluationConfig, ExperimentConfig, ExtractionSettings, PathsConfig, SegmentationConfig, Seeds,
    TuningConfig, TuningMode,
};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "voxpd", version, about = "Parkinson's speech screening pipeline")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split recordings at silent gaps into per-segment WAVs and a new manifest.
    Segment(SegmentArgs),
    /// Compute the 24-feature table for every row of a manifest.
    Extract(ExtractArgs),
    /// Grid search and repeated k-fold over feature sets and model families.
    Evaluate(EvaluateArgs),
    /// Merge run records into one comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// CSV with path,label,subject_id rows.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory for segment WAVs and manifest.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Feature CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupingArg {
    Segment,
    Subject,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::Segment => Grouping::Segment,
            GroupingArg::Subject => Grouping::Subject,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Feature CSV written by `extract`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for report.csv, report.txt and run.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config fold grouping.
    #[arg(long, value_enum)]
    pub grouping: Option<GroupingArg>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// run.json files to merge.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn required(flag: Option<PathBuf>, fallback: Option<&PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| fallback.cloned())
        .ok_or_else(|| CliError::Usage(format!("--{name} is required (or set paths.{name} in the config)")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Segment(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let manifest = required(a.manifest, cfg.paths.manifest.as_ref(), "manifest")?;
            let out = required(a.out, cfg.paths.out.as_ref(), "out")?;
            let rows = cmd_segment(&manifest, &out, &cfg)?;
            eprintln!("segment: {} segments written to {}", rows.len(), out.display());
        }
        Command::Extract(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let manifest = required(a.manifest, cfg.paths.manifest.as_ref(), "manifest")?;
            let out = required(a.out, cfg.paths.features.as_ref(), "out")?;
            let (m, skipped) = cmd_extract(&manifest, &out, &cfg)?;
            eprintln!("extract: {} rows, {} skipped", m.n_rows(), skipped.len());
        }
        Command::Evaluate(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if a.seed.is_some() {
                cfg.seed = a.seed;
            }
            if let Some(g) = a.grouping {
                cfg.evaluation.cv.grouping = g.into();
            }
            let features = required(a.features, cfg.paths.features.as_ref(), "features")?;
            let out = required(a.out, cfg.paths.out.as_ref(), "out")?;
            let record = cmd_evaluate(&features, &cfg, &out)?;
            eprintln!("evaluate: run {} written to {}", record.run_id, out.display());
        }
        Command::Report(a) => {
            cmd_report(&a.runs, &a.out)?;
        }
    }
    Ok(())
}

/// Runs a parsed command line, optionally on a dedicated thread pool.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}
