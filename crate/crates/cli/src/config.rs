use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use voxpd::audio_io::SilenceParams;
use voxpd::classifiers::{Family, ParamGrid};
use voxpd::eval::CvConfig;
use voxpd::features::{ExtractionConfig, FeatureSet, Grouping};
use voxpd::mfcc::MfccConfig;
use voxpd::pitch::PitchConfig;
use voxpd::rng::derive_seed;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub rms_threshold: f64,
    pub min_silence_s: f64,
    pub min_segment_s: f64,
    pub frame_s: f64,
    pub hop_s: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        let p = SilenceParams::default();
        Self {
            rms_threshold: p.rms_threshold,
            min_silence_s: p.min_silence_s,
            min_segment_s: p.min_segment_s,
            frame_s: p.frame_s,
            hop_s: p.hop_s,
        }
    }
}

impl SegmentationConfig {
    pub fn params(&self) -> SilenceParams {
        SilenceParams {
            rms_threshold: self.rms_threshold,
            min_silence_s: self.min_silence_s,
            min_segment_s: self.min_segment_s,
            frame_s: self.frame_s,
            hop_s: self.hop_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    pub pitch_frame_s: f64,
    pub pitch_hop_s: f64,
    pub mfcc_frame_s: f64,
    pub mfcc_hop_s: f64,
    pub pre_emphasis: f64,
    pub mel_filters: usize,
    pub fft_size: Option<usize>,
    pub min_cycles: usize,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        let p = PitchConfig::default();
        let m = MfccConfig::default();
        Self {
            f0_min: p.f_min,
            f0_max: p.f_max,
            voicing_threshold: p.voicing_threshold,
            pitch_frame_s: p.frame_s,
            pitch_hop_s: p.hop_s,
            mfcc_frame_s: m.frame_s,
            mfcc_hop_s: m.hop_s,
            pre_emphasis: m.pre_emphasis,
            mel_filters: m.n_filters,
            fft_size: m.fft_size,
            min_cycles: ExtractionConfig::default().min_cycles,
        }
    }
}

impl ExtractionSettings {
    pub fn config(&self) -> ExtractionConfig {
        ExtractionConfig {
            pitch: PitchConfig {
                f_min: self.f0_min,
                f_max: self.f0_max,
                voicing_threshold: self.voicing_threshold,
                frame_s: self.pitch_frame_s,
                hop_s: self.pitch_hop_s,
                ..PitchConfig::default()
            },
            mfcc: MfccConfig {
                frame_s: self.mfcc_frame_s,
                hop_s: self.mfcc_hop_s,
                pre_emphasis: self.pre_emphasis,
                n_filters: self.mel_filters,
                fft_size: self.fft_size,
                ..MfccConfig::default()
            },
            min_cycles: self.min_cycles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    /// Grid search once on a stratified training split, then evaluate the winner.
    #[default]
    Holdout,
    /// Grid search inside every outer training fold.
    Nested,
    /// Family defaults, no search.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub mode: TuningMode,
    pub train_fraction: f64,
    pub inner_folds: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            mode: TuningMode::Holdout,
            train_fraction: 0.7,
            inner_folds: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub k: usize,
    pub repeats: usize,
    pub grouping: Grouping,
}

impl Default for CvSettings {
    fn default() -> Self {
        let d = CvConfig::default();
        Self {
            k: d.k,
            repeats: d.repeats,
            grouping: d.grouping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub feature_sets: Vec<String>,
    /// k for `selected_k`.
    pub selected_k: usize,
    pub families: Vec<String>,
    pub cv: CvSettings,
    pub tuning: TuningConfig,
    /// Replaces the default grid of each listed family.
    pub grids: Vec<ParamGrid>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            feature_sets: vec!["acoustic_11".into(), "all_24".into(), "selected_k".into()],
            selected_k: 10,
            families: Family::ALL.iter().map(|f| f.config_name().to_string()).collect(),
            cv: CvSettings::default(),
            tuning: TuningConfig::default(),
            grids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub manifest: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset label used in merged reports.
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub segmentation: SegmentationConfig,
    pub extraction: ExtractionSettings,
    pub evaluation: EvaluationConfig,
    pub paths: PathsConfig,
}

/// Seeds of every randomized stage, all derived from the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub cv: u64,
    pub tuning: u64,
    pub models: u64,
}

impl Seeds {
    pub fn from_base(base: u64) -> Self {
        Self {
            base,
            cv: derive_seed(base, 0),
            tuning: derive_seed(base, 1),
            models: derive_seed(base, 2),
        }
    }

    /// Model seed for a family; the same under every feature set.
    pub fn model(&self, family: Family) -> u64 {
        let idx = Family::ALL.iter().position(|&f| f == family).expect("known family") as u64;
        derive_seed(self.models, idx)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the resolved configuration, in hex.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical))
    }

    pub fn seeds(&self) -> Result<Seeds, CliError> {
        self.seed
            .map(Seeds::from_base)
            .ok_or_else(|| CliError::Config("no seed: set `seed` in the config or pass --seed".into()))
    }

    pub fn feature_sets(&self) -> Result<Vec<FeatureSet>, CliError> {
        let sets = self
            .evaluation
            .feature_sets
            .iter()
            .map(|s| FeatureSet::parse(s, self.evaluation.selected_k).map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()?;
        if sets.is_empty() {
            return Err(CliError::Config("evaluation.feature_sets is empty".into()));
        }
        let mut labels: Vec<String> = sets.iter().map(|s| s.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("evaluation.feature_sets lists a set twice".into()));
        }
        Ok(sets)
    }

    /// Families in report order.
    pub fn families(&self) -> Result<Vec<Family>, CliError> {
        let mut out = Vec::new();
        for name in &self.evaluation.families {
            let f = Family::parse(name).ok_or_else(|| CliError::Config(format!("unknown model family {name:?}")))?;
            if out.contains(&f) {
                return Err(CliError::Config(format!("model family {name:?} listed twice")));
            }
            out.push(f);
        }
        if out.is_empty() {
            return Err(CliError::Config("evaluation.families is empty".into()));
        }
        out.sort();
        Ok(out)
    }

    pub fn grid(&self, family: Family) -> ParamGrid {
        self.evaluation
            .grids
            .iter()
            .find(|g| g.family() == family)
            .cloned()
            .unwrap_or_else(|| ParamGrid::default_for(family))
    }

    pub fn cv(&self) -> Result<CvConfig, CliError> {
        let cfg = CvConfig {
            k: self.evaluation.cv.k,
            repeats: self.evaluation.cv.repeats,
            seed: self.seeds()?.cv,
            grouping: self.evaluation.cv.grouping,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything `evaluate` needs before any data is touched.
    pub fn validate_evaluation(&self) -> Result<(), CliError> {
        self.seeds()?;
        self.feature_sets()?;
        let families = self.families()?;
        self.cv()?;
        let t = &self.evaluation.tuning;
        if !(t.train_fraction > 0.0 && t.train_fraction < 1.0) {
            return Err(CliError::Config(format!("tuning.train_fraction {} outside (0, 1)", t.train_fraction)));
        }
        if t.inner_folds < 2 {
            return Err(CliError::Config("tuning.inner_folds must be >= 2".into()));
        }
        let mut seen = Vec::new();
        for g in &self.evaluation.grids {
            if seen.contains(&g.family()) {
                return Err(CliError::Config(format!("two grids for {}", g.family())));
            }
            seen.push(g.family());
            if g.cells().is_empty() {
                return Err(CliError::Config(format!("grid for {} is empty", g.family())));
            }
        }
        for f in families {
            if t.mode == TuningMode::None || f == Family::NaiveBayes {
                continue;
            }
            if self.grid(f).cells().iter().all(|c| c.validate().is_err()) {
                return Err(CliError::Config(format!("every cell of the {f} grid is invalid")));
            }
        }
        Ok(())
    }

    pub fn validate_extraction(&self) -> Result<(), CliError> {
        let cfg = self.extraction.config();
        cfg.pitch.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.mfcc.n_filters < cfg.mfcc.n_ceps {
            return Err(CliError::Config(format!(
                "mel_filters must be at least {} to yield 13 MFCCs",
                cfg.mfcc.n_ceps
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides_parse() {
        let c = ExperimentConfig::parse(
            r#"
            seed = 7
            name = "italian"
            [evaluation]
            feature_sets = ["all_24", "selected_k"]
            selected_k = 5
            families = ["svm", "knn"]
            [evaluation.cv]
            repeats = 2
            grouping = "subject"
            [[evaluation.grids]]
            family = "knn"
            k = [1, 3]
            "#,
        )
        .unwrap();
        c.validate_evaluation().unwrap();
        assert_eq!(c.families().unwrap(), vec![Family::Knn, Family::Svm]);
        assert_eq!(c.feature_sets().unwrap(), vec![FeatureSet::All24, FeatureSet::SelectedK(5)]);
        assert_eq!(c.cv().unwrap().grouping, Grouping::Subject);
        assert_eq!(c.grid(Family::Knn), ParamGrid::Knn { k: vec![1, 3] });
        assert_eq!(c.grid(Family::Svm), ParamGrid::default_for(Family::Svm));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("seed = 1\nbogus = 2").is_err());
        let no_seed = ExperimentConfig::parse("").unwrap();
        assert!(matches!(no_seed.validate_evaluation(), Err(CliError::Config(_))));
        let bad_family = ExperimentConfig::parse("seed = 1\n[evaluation]\nfamilies = [\"mlp\"]").unwrap();
        assert!(bad_family.validate_evaluation().is_err());
        let bad_set = ExperimentConfig::parse("seed = 1\n[evaluation]\nfeature_sets = [\"mfcc_only\"]").unwrap();
        assert!(bad_set.validate_evaluation().is_err());
        let bad_grid = ExperimentConfig::parse("seed = 1\n[[evaluation.grids]]\nfamily = \"knn\"\nk = [2, 4]").unwrap();
        assert!(bad_grid.validate_evaluation().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse("seed = 1").unwrap();
        let b = ExperimentConfig::parse("seed = 2").unwrap();
        assert_eq!(a.sha256(), ExperimentConfig::parse("seed = 1").unwrap().sha256());
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }
}
