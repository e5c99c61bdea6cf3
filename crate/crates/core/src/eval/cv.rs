use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, metrics, ConfusionCounts, EvalError, Metric, MetricSet};
use crate::classifiers::{fit, grid_search, Family, GridSearchResult, ModelSpec, ParamGrid};
use crate::features::{
    anova_f_scores, apply_min_max, fit_min_max, split_train_validation, stratified_kfold, FeatureMatrix, FeatureSet,
    Grouping, OutlierBounds, ScalerParams,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub grouping: Grouping,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 6,
            repeats: 10,
            seed: 0,
            grouping: Grouping::Segment,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.k < 2 {
            return Err(EvalError::InvalidConfig(format!("k must be >= 2, got {}", self.k)));
        }
        if self.repeats == 0 {
            return Err(EvalError::InvalidConfig("repeats must be >= 1".into()));
        }
        Ok(())
    }
}

/// How each outer fold obtains its model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPlan {
    /// The same hyperparameters in every fold.
    Fixed(ModelSpec),
    /// A fresh grid search on each outer training partition.
    Nested { grid: ParamGrid, inner_folds: usize },
}

impl ModelPlan {
    pub fn family(&self) -> Family {
        match self {
            ModelPlan::Fixed(s) => s.family(),
            ModelPlan::Nested { grid, .. } => grid.family(),
        }
    }
}

/// Outlier bounds, scaler and column choice learned from training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPreprocessor {
    base_columns: Vec<usize>,
    bounds: OutlierBounds<f64>,
    scaler: ScalerParams<f64>,
    /// Positions within `base_columns` kept after selection.
    selected: Option<Vec<usize>>,
}

impl FoldPreprocessor {
    pub fn fit(train: &FeatureMatrix<f64>, set: FeatureSet) -> Result<Self, EvalError> {
        let base_columns = set.fixed_columns().unwrap_or_else(|| (0..train.n_cols()).collect());
        if base_columns.iter().any(|&j| j >= train.n_cols()) {
            return Err(EvalError::InvalidConfig(format!(
                "feature set {} needs {} columns, table has {}",
                set.label(),
                base_columns.len(),
                train.n_cols()
            )));
        }
        let base = train.select_columns(&base_columns);
        let bounds = OutlierBounds::fit(&base)?;
        let clipped = bounds.apply(&base);
        let scaler = fit_min_max(&clipped)?;
        let selected = match set {
            FeatureSet::SelectedK(k) => Some(anova_f_scores(&apply_min_max(&scaler, &clipped))?.select_top_k(k)),
            _ => None,
        };
        Ok(Self {
            base_columns,
            bounds,
            scaler,
            selected,
        })
    }

    pub fn apply(&self, m: &FeatureMatrix<f64>) -> FeatureMatrix<f64> {
        let out = apply_min_max(&self.scaler, &self.bounds.apply(&m.select_columns(&self.base_columns)));
        match &self.selected {
            Some(cols) => out.select_columns(cols),
            None => out,
        }
    }

    pub fn scaler(&self) -> &ScalerParams<f64> {
        &self.scaler
    }

    pub fn bounds(&self) -> &OutlierBounds<f64> {
        &self.bounds
    }

    /// Original column indices the model sees.
    pub fn columns(&self) -> Vec<usize> {
        match &self.selected {
            Some(cols) => cols.iter().map(|&c| self.base_columns[c]).collect(),
            None => self.base_columns.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
    pub spec: ModelSpec,
    /// Columns used, when chosen by selection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_features: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub accuracy: f64,
    pub specificity: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl MetricStats {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::Specificity => self.specificity,
            Metric::Recall => self.recall,
            Metric::Precision => self.precision,
            Metric::F1 => self.f1,
        }
    }

    fn from_fn(f: impl Fn(Metric) -> f64) -> Self {
        Self {
            accuracy: f(Metric::Accuracy),
            specificity: f(Metric::Specificity),
            recall: f(Metric::Recall),
            precision: f(Metric::Precision),
            f1: f(Metric::F1),
        }
    }
}

/// One (feature set, family) cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub feature_set: String,
    pub family: Family,
    pub k: usize,
    pub repeats: usize,
    pub mean: MetricStats,
    /// Sample standard deviation over folds.
    pub std: MetricStats,
    pub folds: Vec<FoldRecord>,
}

impl CvEntry {
    fn from_folds(feature_set: String, family: Family, cfg: &CvConfig, folds: Vec<FoldRecord>) -> Self {
        let n = folds.len() as f64;
        let mean = MetricStats::from_fn(|m| folds.iter().map(|f| f.metrics.get(m)).sum::<f64>() / n);
        let std = MetricStats::from_fn(|m| {
            if folds.len() < 2 {
                return 0.0;
            }
            let mu = mean.get(m);
            (folds.iter().map(|f| (f.metrics.get(m) - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        });
        Self {
            feature_set,
            family,
            k: cfg.k,
            repeats: cfg.repeats,
            mean,
            std,
            folds,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub entries: Vec<CvEntry>,
}

impl CvReport {
    pub fn extend(&mut self, other: CvReport) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, feature_set: &str, family: Family) -> Option<&CvEntry> {
        self.entries
            .iter()
            .find(|e| e.feature_set == feature_set && e.family == family)
    }
}

/// Test-fold row indices per repeat.
pub fn fold_partitions(m: &FeatureMatrix<f64>, cfg: &CvConfig) -> Result<Vec<Vec<Vec<usize>>>, EvalError> {
    cfg.validate()?;
    (0..cfg.repeats)
        .map(|r| {
            stratified_kfold(m.labels(), m.subjects(), cfg.grouping, cfg.k, derive_seed(cfg.seed, r as u64))
                .map_err(EvalError::from)
        })
        .collect()
}

fn run_fold(
    m: &FeatureMatrix<f64>,
    set: FeatureSet,
    plan: &ModelPlan,
    cfg: &CvConfig,
    repeat: usize,
    fold: usize,
    test: &[usize],
) -> Result<FoldRecord, EvalError> {
    let mut in_test = vec![false; m.n_rows()];
    test.iter().for_each(|&i| in_test[i] = true);
    let train_idx: Vec<usize> = (0..m.n_rows()).filter(|&i| !in_test[i]).collect();
    let train = m.subset_rows(&train_idx);
    let held = m.subset_rows(test);

    let prep = FoldPreprocessor::fit(&train, set)?;
    let train = prep.apply(&train);
    let held = prep.apply(&held);

    let unit = (repeat * cfg.k + fold) as u64;
    let spec = match plan {
        ModelPlan::Fixed(spec) => ModelSpec::new(spec.params.clone(), derive_seed(spec.seed, unit)),
        ModelPlan::Nested { grid, inner_folds } => {
            let subjects = (cfg.grouping == Grouping::Subject).then(|| train.subjects());
            let seed = derive_seed(derive_seed(cfg.seed, u64::MAX), unit);
            grid_search(grid, train.rows(), train.labels(), subjects, *inner_folds, seed)?.best
        }
    };
    let model = fit(&spec, train.rows(), train.labels())?;
    let pred = model.predict(held.rows())?;
    let counts = confusion(held.labels(), &pred)?;
    let selected_features = matches!(set, FeatureSet::SelectedK(_))
        .then(|| prep.columns().iter().map(|&j| m.names()[j].clone()).collect());
    Ok(FoldRecord {
        repeat,
        fold,
        n_train: train.n_rows(),
        n_test: held.n_rows(),
        counts,
        metrics: metrics(&counts)?,
        spec,
        selected_features,
    })
}

/// Repeated stratified k-fold of one model plan on one feature set.
/// Outlier bounds, scaling and selection are refit inside every fold.
pub fn repeated_kfold(
    m: &FeatureMatrix<f64>,
    set: FeatureSet,
    plan: &ModelPlan,
    cfg: &CvConfig,
) -> Result<CvReport, EvalError> {
    let partitions = fold_partitions(m, cfg)?;
    let jobs: Vec<(usize, usize, &Vec<usize>)> = partitions
        .iter()
        .enumerate()
        .flat_map(|(r, folds)| folds.iter().enumerate().map(move |(f, t)| (r, f, t)))
        .collect();
    let folds = jobs
        .into_par_iter()
        .map(|(r, f, test)| run_fold(m, set, plan, cfg, r, f, test))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport {
        entries: vec![CvEntry::from_folds(set.label(), plan.family(), cfg, folds)],
    })
}

/// Grid search on a stratified training partition of `m`, preprocessed with
/// parameters fitted on that partition alone.
pub fn tune_holdout(
    m: &FeatureMatrix<f64>,
    set: FeatureSet,
    grid: &ParamGrid,
    train_fraction: f64,
    inner_folds: usize,
    seed: u64,
    grouping: Grouping,
) -> Result<GridSearchResult, EvalError> {
    let (train, _) = split_train_validation(m, train_fraction, derive_seed(seed, 0), grouping)?;
    let train = FoldPreprocessor::fit(&train, set)?.apply(&train);
    let subjects = (grouping == Grouping::Subject).then(|| train.subjects());
    Ok(grid_search(
        grid,
        train.rows(),
        train.labels(),
        subjects,
        inner_folds,
        derive_seed(seed, 1),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Label;

    fn balanced(n_per_class: usize) -> FeatureMatrix<f64> {
        let rows = (0..2 * n_per_class)
            .map(|i| vec![i as f64, (i % 7) as f64, (i / 2) as f64])
            .collect();
        let labels = (0..2 * n_per_class).map(|i| Label::from_index(i % 2)).collect();
        FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows, labels).unwrap()
    }

    #[test]
    fn sixty_rows_six_folds() {
        let m = balanced(30);
        let cfg = CvConfig { repeats: 2, seed: 3, ..CvConfig::default() };
        let parts = fold_partitions(&m, &cfg).unwrap();
        for folds in &parts {
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            assert_eq!(all, (0..60).collect::<Vec<_>>());
            for f in folds {
                assert_eq!(f.len(), 10);
                assert_eq!(f.iter().filter(|&&i| m.labels()[i].is_positive()).count(), 5);
            }
        }
        assert_ne!(parts[0], parts[1]);
        assert_eq!(parts, fold_partitions(&m, &cfg).unwrap());
    }

    #[test]
    fn class_too_small_names_class() {
        let mut m = balanced(3);
        m = m.subset_rows(&[0, 1, 2, 3, 4, 5]);
        let err = fold_partitions(&m, &CvConfig::default()).unwrap_err();
        assert!(matches!(err, EvalError::Feature(crate::features::FeatureError::ClassTooSmall(..))));
    }

    #[test]
    fn preprocessor_columns() {
        let m = balanced(10);
        let p = FoldPreprocessor::fit(&m, FeatureSet::SelectedK(2)).unwrap();
        assert_eq!(p.columns().len(), 2);
        assert_eq!(p.apply(&m).n_cols(), 2);
    }
}
