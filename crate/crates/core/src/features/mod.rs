//! Per-segment feature vectors, the labelled corpus table and its
//! preprocessing, partitioning and ANOVA-F selection.

mod io;
mod partition;
mod preprocess;
mod selection;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::mfcc::{MfccConfig, MfccError, MfccExtractor};
use crate::perturbation::{self, PerturbationError};
use crate::pitch::{self, PitchConfig, PitchError};
use crate::scalar::Real;

pub use io::{read_feature_csv, read_manifest, write_feature_csv, write_manifest, ManifestEntry};
pub use partition::{split_train_validation, stratified_kfold, Grouping};
pub use preprocess::{apply_min_max, fit_min_max, outlier_clip, OutlierBounds, ScalerParams};
pub use selection::{anova_f_scores, SelectionResult};

/// Canonical column order of the feature table.
pub const FEATURE_NAMES: [&str; 24] = [
    "jitter_absolute",
    "jitter_relative",
    "jitter_rap",
    "jitter_ppq5",
    "shimmer_db",
    "shimmer_relative",
    "shimmer_apq3",
    "shimmer_apq5",
    "fundamental_frequency",
    "hnr",
    "pitch",
    "mfcc_0",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "mfcc_5",
    "mfcc_6",
    "mfcc_7",
    "mfcc_8",
    "mfcc_9",
    "mfcc_10",
    "mfcc_11",
    "mfcc_12",
];

/// Number of leading acoustic (non-MFCC) columns.
pub const ACOUSTIC_COUNT: usize = 11;
pub const MFCC_COUNT: usize = 13;
pub const FEATURE_COUNT: usize = ACOUSTIC_COUNT + MFCC_COUNT;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("segment is unvoiced")]
    Unvoiced,
    #[error("segment yields {found} glottal cycles, at least {required} needed")]
    TooFewCycles { found: usize, required: usize },
    #[error(transparent)]
    Pitch(#[from] PitchError),
    #[error(transparent)]
    Mfcc(#[from] MfccError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error("feature {0} is not finite")]
    NonFinite(&'static str),
    #[error("invalid feature matrix: {0}")]
    InvalidMatrix(String),
    #[error("class {0} has too few rows: {1}")]
    ClassTooSmall(Label, String),
    #[error("feature table: {0}")]
    Csv(String),
    #[error("unknown feature set {0:?}")]
    UnknownFeatureSet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Healthy control, encoded 0.
    #[serde(rename = "HC")]
    Healthy,
    /// Parkinson's disease, encoded 1; the positive class.
    #[serde(rename = "PD")]
    Parkinson,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Healthy, Label::Parkinson];

    pub fn index(self) -> usize {
        match self {
            Label::Healthy => 0,
            Label::Parkinson => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::Healthy
        } else {
            Label::Parkinson
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Parkinson
    }

    /// `+1` for PD, `-1` for HC.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Healthy => "HC",
            Label::Parkinson => "PD",
        })
    }
}

impl FromStr for Label {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "PD" | "pd" | "1" => Ok(Label::Parkinson),
            "HC" | "hc" | "0" => Ok(Label::Healthy),
            other => Err(FeatureError::Csv(format!("label {other:?} is neither PD nor HC"))),
        }
    }
}

/// Where a row came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub segment: Option<usize>,
}

/// Settings for turning one segment into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    pub pitch: PitchConfig,
    pub mfcc: MfccConfig,
    pub min_cycles: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            pitch: PitchConfig::default(),
            mfcc: MfccConfig::default(),
            min_cycles: 5,
        }
    }
}

/// The 24 features of one segment in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector<T>(pub [T; FEATURE_COUNT]);

impl<T: Real> FeatureVector<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<T> {
        FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.0[i])
    }
}

/// Extracts perturbation, pitch, HNR and mean MFCC features from a segment.
pub fn assemble_feature_vector<T: Real>(
    segment: &AudioClip<T>,
    cfg: &ExtractionConfig,
) -> Result<FeatureVector<T>, FeatureError> {
    let contour = pitch::f0_contour(segment, &cfg.pitch)?;
    let track = match pitch::extract_period_track(segment, &contour, &cfg.pitch) {
        Ok(t) => t,
        Err(PitchError::NoVoicedFrames) => return Err(FeatureError::Unvoiced),
        Err(e) => return Err(e.into()),
    };
    let required = cfg.min_cycles.max(5);
    if track.len() < required {
        return Err(FeatureError::TooFewCycles {
            found: track.len(),
            required,
        });
    }
    let perturb = perturbation::compute_all(&track)?;
    let (f0, pitch_median) = pitch::f0_and_pitch_features(&contour)?;
    let hnr = pitch::mean_hnr(segment, &contour, &cfg.pitch)?;
    let mfcc = MfccExtractor::new(cfg.mfcc, segment.sample_rate())?.features(segment.samples())?;
    if mfcc.coefficients().len() != MFCC_COUNT {
        return Err(FeatureError::Mfcc(MfccError::InvalidConfig(format!(
            "feature table needs {MFCC_COUNT} coefficients, config yields {}",
            mfcc.coefficients().len()
        ))));
    }

    let mut values = [T::zero(); FEATURE_COUNT];
    values[..8].copy_from_slice(&perturb);
    values[8] = f0;
    values[9] = hnr;
    values[10] = pitch_median;
    values[ACOUSTIC_COUNT..].copy_from_slice(mfcc.coefficients());
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(FEATURE_NAMES[i]));
    }
    Ok(FeatureVector(values))
}

/// Labelled table of feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    names: Vec<String>,
    rows: Vec<Vec<T>>,
    labels: Vec<Label>,
    subjects: Vec<String>,
    provenance: Vec<Provenance>,
}

impl<T: Real> FeatureMatrix<T> {
    /// Empty table over the canonical 24 columns.
    pub fn canonical() -> Self {
        Self::empty(FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
    }

    pub fn empty(names: Vec<String>) -> Self {
        Self {
            names,
            rows: Vec::new(),
            labels: Vec::new(),
            subjects: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn new(
        names: Vec<String>,
        rows: Vec<Vec<T>>,
        labels: Vec<Label>,
        subjects: Vec<String>,
        provenance: Vec<Provenance>,
    ) -> Result<Self, FeatureError> {
        let n = rows.len();
        if labels.len() != n || subjects.len() != n || provenance.len() != n {
            return Err(FeatureError::InvalidMatrix(format!(
                "{n} rows, {} labels, {} subjects, {} provenance entries",
                labels.len(),
                subjects.len(),
                provenance.len()
            )));
        }
        let mut m = Self::empty(names);
        for (((r, l), s), p) in rows.into_iter().zip(labels).zip(subjects).zip(provenance) {
            m.push(r, l, s, p)?;
        }
        Ok(m)
    }

    /// Synthetic-data convenience: subjects are the row indices.
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<T>>, labels: Vec<Label>) -> Result<Self, FeatureError> {
        let n = rows.len();
        Self::new(
            names,
            rows,
            labels,
            (0..n).map(|i| format!("s{i}")).collect(),
            vec![Provenance::default(); n],
        )
    }

    pub fn push(
        &mut self,
        row: Vec<T>,
        label: Label,
        subject: impl Into<String>,
        provenance: Provenance,
    ) -> Result<(), FeatureError> {
        if row.len() != self.names.len() {
            return Err(FeatureError::InvalidMatrix(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.names.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidMatrix(format!(
                "row {} has a non-finite {}",
                self.rows.len(),
                self.names[j]
            )));
        }
        self.rows.push(row);
        self.labels.push(label);
        self.subjects.push(subject.into());
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn class_count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset_rows(&self, indices: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }

    /// Columns at `indices`, in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self {
            names: indices.iter().map(|&j| self.names[j].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| indices.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            subjects: self.subjects.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Same metadata, new values.
    pub fn with_rows(&self, rows: Vec<Vec<T>>) -> Self {
        assert_eq!(rows.len(), self.rows.len());
        Self {
            rows,
            ..self.clone()
        }
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Self {
        assert_eq!(labels.len(), self.rows.len());
        Self {
            labels,
            ..self.clone()
        }
    }

    /// Column indices for `names`, erroring on the first unknown name.
    pub fn column_indices(&self, names: &[&str]) -> Result<Vec<usize>, FeatureError> {
        names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| FeatureError::InvalidMatrix(format!("no column named {n:?}")))
            })
            .collect()
    }
}

/// Column subsets evaluated by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    /// The eleven acoustic measures.
    Acoustic11,
    /// Acoustic measures plus the 13 MFCCs.
    All24,
    /// Top-k columns by ANOVA F, chosen on training rows.
    SelectedK(usize),
}

impl FeatureSet {
    pub fn label(&self) -> String {
        match self {
            FeatureSet::Acoustic11 => "acoustic_11".into(),
            FeatureSet::All24 => "all_24".into(),
            FeatureSet::SelectedK(k) => format!("selected_{k}"),
        }
    }

    /// Fixed column subset, or `None` when chosen per training partition.
    pub fn fixed_columns(&self) -> Option<Vec<usize>> {
        match self {
            FeatureSet::Acoustic11 => Some((0..ACOUSTIC_COUNT).collect()),
            FeatureSet::All24 => Some((0..FEATURE_COUNT).collect()),
            FeatureSet::SelectedK(_) => None,
        }
    }

    /// Parses `acoustic_11`, `all_24`, `selected_k` (with `default_k`) or `selected_<k>`.
    pub fn parse(s: &str, default_k: usize) -> Result<Self, FeatureError> {
        match s {
            "acoustic_11" => Ok(FeatureSet::Acoustic11),
            "all_24" => Ok(FeatureSet::All24),
            "selected_k" => Self::selected(default_k, s),
            other => match other.strip_prefix("selected_").and_then(|k| k.parse().ok()) {
                Some(k) => Self::selected(k, s),
                None => Err(FeatureError::UnknownFeatureSet(other.into())),
            },
        }
    }

    fn selected(k: usize, s: &str) -> Result<Self, FeatureError> {
        if (1..=FEATURE_COUNT).contains(&k) {
            Ok(FeatureSet::SelectedK(k))
        } else {
            Err(FeatureError::UnknownFeatureSet(format!("{s} (k must be 1..=24, got {k})")))
        }
    }
}
