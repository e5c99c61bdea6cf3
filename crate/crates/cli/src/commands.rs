use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use voxpd::audio_io::{load_wav, segment_by_silence, write_segments};
use voxpd::classifiers::{Family, GridCell, ModelSpec};
use voxpd::eval::{render_report, repeated_kfold, tune_holdout, CvReport, ModelPlan, ReportFormat};
use voxpd::features::{
    assemble_feature_vector, read_feature_csv, read_manifest, write_feature_csv, write_manifest, FeatureError,
    FeatureMatrix, FeatureSet, ManifestEntry, Provenance, FEATURE_NAMES,
};
use voxpd::VERSION;

use crate::config::{ExperimentConfig, Seeds, TuningMode};
use crate::CliError;

fn preamble(config_sha: &str) -> Vec<String> {
    vec![format!("voxpd {VERSION}"), format!("config_sha256 {config_sha}")]
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::read(path, e))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Splits every recording in `manifest` at silent gaps, writing one WAV per
/// segment plus `manifest.csv` into `out_dir`. Returns the new manifest.
pub fn cmd_segment(manifest: &Path, out_dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<ManifestEntry>, CliError> {
    let params = cfg.segmentation.params();
    params.validate()?;
    let entries = read_manifest(open(manifest)?).map_err(|e| CliError::read(manifest, e))?;
    let base = manifest_dir(manifest);

    // Unique output stems; repeated file names get the entry index appended.
    let stems: Vec<String> = entries
        .iter()
        .map(|e| Path::new(&e.path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let stems: Vec<String> = stems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if stems.iter().filter(|t| *t == s).count() > 1 {
                format!("{s}_{i}")
            } else {
                s.clone()
            }
        })
        .collect();

    fs::create_dir_all(out_dir).map_err(|e| CliError::write(out_dir, e))?;
    let per_file = entries
        .par_iter()
        .zip(&stems)
        .map(|(entry, stem)| {
            let clip = load_wav::<f64>(resolve(&base, &entry.path))?;
            let segs = segment_by_silence(&clip, &params)?;
            let paths = write_segments(&clip, &segs, out_dir, stem)?;
            Ok(paths
                .into_iter()
                .enumerate()
                .map(|(i, p)| ManifestEntry {
                    path: p.file_name().expect("segment file").to_string_lossy().into_owned(),
                    label: entry.label,
                    subject_id: entry.subject_id.clone(),
                    source: Some(entry.source.clone().unwrap_or_else(|| entry.path.clone())),
                    segment: Some(i),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out: Vec<ManifestEntry> = per_file.into_iter().flatten().collect();

    let mut buf = Vec::new();
    write_manifest(&out, &mut buf, &preamble(&cfg.sha256())).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&out_dir.join("manifest.csv"), &buf)?;
    Ok(out)
}

/// A manifest row left out of the feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

fn skippable(e: &FeatureError) -> bool {
    !matches!(e, FeatureError::InvalidMatrix(_) | FeatureError::Csv(_) | FeatureError::UnknownFeatureSet(_))
}

/// Computes the 24 features of each manifest row and writes the table to
/// `out`. Segments without usable voicing are skipped with a reason.
pub fn cmd_extract(manifest: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<(FeatureMatrix<f64>, Vec<Skipped>), CliError> {
    cfg.validate_extraction()?;
    let ecfg = cfg.extraction.config();
    let entries = read_manifest(open(manifest)?).map_err(|e| CliError::read(manifest, e))?;
    let base = manifest_dir(manifest);

    let results = entries
        .par_iter()
        .map(|entry| {
            let clip = load_wav::<f64>(resolve(&base, &entry.path))?;
            match assemble_feature_vector(&clip, &ecfg) {
                Ok(v) => Ok(Ok(v)),
                Err(e) if skippable(&e) => Ok(Err(e.to_string())),
                Err(e) => Err(CliError::from(e)),
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut m = FeatureMatrix::canonical();
    let mut skipped = Vec::new();
    for (entry, r) in entries.iter().zip(results) {
        match r {
            Ok(v) => m.push(
                v.values().to_vec(),
                entry.label,
                entry.subject_id.clone(),
                Provenance {
                    source: entry.source.clone().unwrap_or_else(|| entry.path.clone()),
                    segment: entry.segment,
                },
            )?,
            Err(reason) => skipped.push(Skipped { path: entry.path.clone(), reason }),
        }
    }
    for s in &skipped {
        eprintln!("warning: skipping {}: {}", s.path, s.reason);
    }
    let mut buf = Vec::new();
    write_feature_csv(&m, &mut buf, &preamble(&cfg.sha256())).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(out, &buf)?;
    Ok((m, skipped))
}

/// Hyperparameter choice for one (feature set, family) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub feature_set: String,
    pub family: Family,
    pub mode: TuningMode,
    /// Model settings evaluated in every fold; absent under nested tuning.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub grid: Vec<GridCell>,
}

pub const RUN_FORMAT: &str = "voxpd-run";

/// Machine-readable record of one `evaluate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub tool_version: String,
    pub run_id: String,
    pub name: Option<String>,
    pub config_sha256: String,
    pub features_sha256: String,
    pub seeds: Seeds,
    pub config: ExperimentConfig,
    pub selected_features: BTreeMap<String, BTreeMap<String, usize>>,
    pub tuning: Vec<TuningRecord>,
    pub report: CvReport,
}

impl RunRecord {
    pub fn title(&self) -> String {
        match &self.name {
            Some(n) => format!("{n} [{}]", self.run_id),
            None => format!("run {}", self.run_id),
        }
    }
}

fn header_text(cfg_sha: &str, run_id: &str) -> String {
    format!("# voxpd {VERSION}\n# config_sha256 {cfg_sha}\n# run_id {run_id}\n")
}

/// Runs every configured feature set × family through tuning and repeated
/// k-fold, then writes `report.csv`, `report.txt` and `run.json` to `out_dir`.
pub fn cmd_evaluate(features: &Path, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunRecord, CliError> {
    cfg.validate_evaluation()?;
    let bytes = fs::read(features).map_err(|e| CliError::read(features, e))?;
    let m = read_feature_csv(bytes.as_slice()).map_err(|e| CliError::read(features, e))?;
    let sets = cfg.feature_sets()?;
    let families = cfg.families()?;
    let names: Vec<&str> = m.names().iter().map(String::as_str).collect();
    if names != FEATURE_NAMES {
        return Err(CliError::Data(format!(
            "{}: columns {:?} do not match the 24 canonical feature names",
            features.display(),
            names
        )));
    }
    let seeds = cfg.seeds()?;
    let cv = cfg.cv()?;
    let tuning = &cfg.evaluation.tuning;

    let mut report = CvReport::default();
    let mut tuning_records = Vec::new();
    for &set in &sets {
        for &family in &families {
            eprintln!("evaluate: {} / {}", set.label(), family);
            let grid = cfg.grid(family);
            let (plan, record) = match tuning.mode {
                TuningMode::None => {
                    let spec = ModelSpec::default_for(family, seeds.model(family));
                    (ModelPlan::Fixed(spec.clone()), TuningRecord {
                        feature_set: set.label(),
                        family,
                        mode: tuning.mode,
                        spec: Some(spec),
                        grid: Vec::new(),
                    })
                }
                TuningMode::Holdout => {
                    let r = tune_holdout(
                        &m,
                        set,
                        &grid,
                        tuning.train_fraction,
                        tuning.inner_folds,
                        seeds.tuning,
                        cv.grouping,
                    )?;
                    let spec = ModelSpec::new(r.best.params, seeds.model(family));
                    (ModelPlan::Fixed(spec.clone()), TuningRecord {
                        feature_set: set.label(),
                        family,
                        mode: tuning.mode,
                        spec: Some(spec),
                        grid: r.cells,
                    })
                }
                TuningMode::Nested => (
                    ModelPlan::Nested {
                        grid,
                        inner_folds: tuning.inner_folds,
                    },
                    TuningRecord {
                        feature_set: set.label(),
                        family,
                        mode: tuning.mode,
                        spec: None,
                        grid: Vec::new(),
                    },
                ),
            };
            report.extend(repeated_kfold(&m, set, &plan, &cv)?);
            tuning_records.push(record);
        }
    }

    // How often each column was chosen, per selected_k set.
    let mut selected_features = BTreeMap::new();
    for e in &report.entries {
        if !matches!(FeatureSet::parse(&e.feature_set, 0), Ok(FeatureSet::SelectedK(_))) {
            continue;
        }
        let counts: &mut BTreeMap<String, usize> = selected_features.entry(e.feature_set.clone()).or_default();
        for f in &e.folds {
            for name in f.selected_features.iter().flatten() {
                *counts.entry(name.clone()).or_default() += 1;
            }
        }
    }

    let config_sha256 = cfg.sha256();
    let features_sha256 = format!("{:x}", Sha256::digest(&bytes));
    let run_id = format!("{:x}", Sha256::digest(format!("{config_sha256}:{features_sha256}")))[..16].to_string();
    let record = RunRecord {
        format: RUN_FORMAT.into(),
        tool_version: VERSION.into(),
        run_id,
        name: cfg.name.clone(),
        config_sha256,
        features_sha256,
        seeds,
        config: cfg.clone(),
        selected_features,
        tuning: tuning_records,
        report,
    };
    write_run_outputs(&record, out_dir)?;
    Ok(record)
}

fn write_run_outputs(record: &RunRecord, out_dir: &Path) -> Result<(), CliError> {
    let head = header_text(&record.config_sha256, &record.run_id);
    let csv = format!("{head}{}", render_report(&record.report, ReportFormat::Csv));
    let mut text = format!("{head}{}\n", record.title());
    text.push_str(&render_report(&record.report, ReportFormat::Text));
    let mut json = serde_json::to_vec_pretty(record).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push(b'\n');
    write_file(&out_dir.join("report.csv"), csv.as_bytes())?;
    write_file(&out_dir.join("report.txt"), text.as_bytes())?;
    write_file(&out_dir.join("run.json"), &json)
}

pub fn load_run(path: &Path) -> Result<RunRecord, CliError> {
    let r: RunRecord = serde_json::from_reader(std::io::BufReader::new(open(path)?))
        .map_err(|e| CliError::read(path, e))?;
    if r.format != RUN_FORMAT {
        return Err(CliError::read(path, format!("not a run record (format {:?})", r.format)));
    }
    Ok(r)
}

/// Merges run records into `comparison.txt` and `comparison.csv`, one
/// block per record in argument order.
pub fn cmd_report(runs: &[PathBuf], out_dir: &Path) -> Result<(String, String), CliError> {
    if runs.is_empty() {
        return Err(CliError::Usage("report needs at least one run record".into()));
    }
    let records = runs.iter().map(|p| load_run(p)).collect::<Result<Vec<_>, _>>()?;
    let mut ids = BTreeSet::new();
    for r in &records {
        if !ids.insert(r.run_id.as_str()) {
            return Err(CliError::Data(format!("duplicate run id {}", r.run_id)));
        }
    }
    let hashes: Vec<&str> = records.iter().map(|r| r.config_sha256.as_str()).collect();
    let mut text = format!("# voxpd {VERSION}\n# config_sha256 {}\n", hashes.join(","));
    let mut csv = text.clone();
    csv.push_str("run_id,name,");
    let mut first = true;
    for r in &records {
        if !first {
            text.push('\n');
        }
        first = false;
        text.push_str(&format!("{}\n", r.title()));
        text.push_str(&render_report(&r.report, ReportFormat::Text));
    }
    // record CSVs may differ in family columns, so each block restates its header
    let mut body = String::new();
    for r in &records {
        let block = render_report(&r.report, ReportFormat::Csv);
        let mut lines = block.lines();
        let header = lines.next().unwrap_or_default();
        body.push_str(&format!("{header}\n"));
        for l in lines {
            body.push_str(&format!("{},{},{l}\n", r.run_id, r.name.as_deref().unwrap_or("")));
        }
    }
    // the first header line is completed by the first block's header
    let mut body_lines = body.lines();
    if let Some(h) = body_lines.next() {
        csv.push_str(h);
        csv.push('\n');
    }
    for l in body_lines {
        if l.starts_with("feature_set,") {
            csv.push_str("run_id,name,");
        }
        csv.push_str(l);
        csv.push('\n');
    }
    write_file(&out_dir.join("comparison.txt"), text.as_bytes())?;
    write_file(&out_dir.join("comparison.csv"), csv.as_bytes())?;
    Ok((text, csv))
}
