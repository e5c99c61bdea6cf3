//! The seven model families behind one fit/predict surface, plus grid search.

mod boosting;
mod forest;
mod grid;
mod knn;
mod logistic;
mod naive_bayes;
mod svm;
mod tree;

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, Label};

pub use boosting::BoostedTrees;
pub use forest::RandomForestModel;
pub use grid::{grid_search, GridCell, GridSearchResult, ParamGrid};
pub use knn::KnnModel;
pub use logistic::{log_loss_and_gradient, LogisticModel};
pub use naive_bayes::GaussianNb;
pub use svm::{ResolvedKernel, SvmModel};
pub use tree::Tree;

/// Version written into persisted models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid {family} hyperparameters: {reason}")]
    InvalidSpec { family: Family, reason: String },
    #[error("{family} needs both classes in the training data")]
    SingleClass { family: Family },
    #[error("{family} needs at least {required} training rows, got {found}")]
    TooFewRows { family: Family, required: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} features per row, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("every grid cell failed to fit: {0}")]
    AllCellsInvalid(String),
    #[error("grid does not match family {0}")]
    GridMismatch(Family),
    #[error("model file: {0}")]
    Persistence(String),
    #[error(transparent)]
    Folds(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knn,
    DecisionTree,
    Svm,
    NaiveBayes,
    LogisticRegression,
    GradientBoosting,
    RandomForest,
}

impl Family {
    /// Report column order.
    pub const ALL: [Family; 7] = [
        Family::Knn,
        Family::DecisionTree,
        Family::Svm,
        Family::NaiveBayes,
        Family::LogisticRegression,
        Family::GradientBoosting,
        Family::RandomForest,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Family::Knn => "KNN",
            Family::DecisionTree => "DT",
            Family::Svm => "SVM",
            Family::NaiveBayes => "NB",
            Family::LogisticRegression => "LR",
            Family::GradientBoosting => "GB",
            Family::RandomForest => "RF",
        }
    }

    pub fn config_name(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::DecisionTree => "decision_tree",
            Family::Svm => "svm",
            Family::NaiveBayes => "naive_bayes",
            Family::LogisticRegression => "logistic_regression",
            Family::GradientBoosting => "gradient_boosting",
            Family::RandomForest => "random_forest",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.config_name() == s || f.short_name().eq_ignore_ascii_case(s))
    }

    /// Hyperparameters used when no search is run.
    pub fn default_params(self) -> Hyperparams {
        match self {
            Family::Knn => Hyperparams::Knn { k: 5 },
            Family::DecisionTree => Hyperparams::DecisionTree { max_depth: None, min_leaf: 1 },
            Family::Svm => Hyperparams::Svm {
                c: 1.0,
                kernel: Kernel::Rbf,
                gamma: Gamma::Heuristic(GammaHeuristic::Scale),
            },
            Family::NaiveBayes => Hyperparams::NaiveBayes { var_floor: 1e-9 },
            Family::LogisticRegression => Hyperparams::LogisticRegression {
                lambda: 0.0,
                tol: 1e-6,
                max_iter: 5000,
            },
            Family::GradientBoosting => Hyperparams::GradientBoosting {
                n_trees: 100,
                learning_rate: 0.1,
                max_depth: 3,
            },
            Family::RandomForest => Hyperparams::RandomForest {
                n_trees: 100,
                max_features: MaxFeatures::Sqrt,
                bootstrap: true,
                max_depth: None,
                min_leaf: 1,
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.config_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaHeuristic {
    /// `1 / (n_features · Var(X))` over all training entries.
    Scale,
}

/// RBF width: a number, or the string `"scale"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Heuristic(GammaHeuristic),
}

/// Features tried per split in a random forest: a count, `"sqrt"` or `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeatures {
    Count(usize),
    Named(MaxFeaturesRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeaturesRule {
    Sqrt,
    All,
}

#[allow(non_upper_case_globals)]
impl MaxFeatures {
    pub const Sqrt: MaxFeatures = MaxFeatures::Named(MaxFeaturesRule::Sqrt);
    pub const All: MaxFeatures = MaxFeatures::Named(MaxFeaturesRule::All);

    fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Count(m) => m.clamp(1, d),
            MaxFeatures::Named(MaxFeaturesRule::Sqrt) => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Named(MaxFeaturesRule::All) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Knn {
        k: usize,
    },
    DecisionTree {
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    Svm {
        c: f64,
        kernel: Kernel,
        gamma: Gamma,
    },
    NaiveBayes {
        var_floor: f64,
    },
    LogisticRegression {
        lambda: f64,
        tol: f64,
        max_iter: usize,
    },
    GradientBoosting {
        n_trees: usize,
        learning_rate: f64,
        max_depth: usize,
    },
    RandomForest {
        n_trees: usize,
        max_features: MaxFeatures,
        bootstrap: bool,
        max_depth: Option<usize>,
        min_leaf: usize,
    },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Knn { .. } => Family::Knn,
            Hyperparams::DecisionTree { .. } => Family::DecisionTree,
            Hyperparams::Svm { .. } => Family::Svm,
            Hyperparams::NaiveBayes { .. } => Family::NaiveBayes,
            Hyperparams::LogisticRegression { .. } => Family::LogisticRegression,
            Hyperparams::GradientBoosting { .. } => Family::GradientBoosting,
            Hyperparams::RandomForest { .. } => Family::RandomForest,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |reason: &str| {
            Err(ClassifierError::InvalidSpec {
                family: self.family(),
                reason: reason.to_string(),
            })
        };
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            Hyperparams::Knn { k } if k == 0 || k % 2 == 0 => bad("k must be odd and >= 1"),
            Hyperparams::DecisionTree { max_depth: Some(0), .. }
            | Hyperparams::RandomForest { max_depth: Some(0), .. } => bad("max_depth must be >= 1"),
            Hyperparams::DecisionTree { min_leaf: 0, .. } | Hyperparams::RandomForest { min_leaf: 0, .. } => {
                bad("min_leaf must be >= 1")
            }
            Hyperparams::Svm { c, .. } if !pos(c) => bad("C must be positive"),
            Hyperparams::Svm { gamma: Gamma::Value(g), .. } if !pos(g) => bad("gamma must be positive"),
            Hyperparams::NaiveBayes { var_floor } if !pos(var_floor) => bad("variance floor must be positive"),
            Hyperparams::LogisticRegression { lambda, tol, max_iter } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    bad("lambda must be non-negative")
                } else if !pos(tol) || max_iter == 0 {
                    bad("tol must be positive and max_iter >= 1")
                } else {
                    Ok(())
                }
            }
            Hyperparams::GradientBoosting { n_trees, learning_rate, max_depth } => {
                if n_trees == 0 || max_depth == 0 || !pos(learning_rate) {
                    bad("n_trees, max_depth and learning_rate must be positive")
                } else {
                    Ok(())
                }
            }
            Hyperparams::RandomForest { n_trees: 0, .. } => bad("n_trees must be >= 1"),
            Hyperparams::RandomForest { max_features: MaxFeatures::Count(0), .. } => bad("max_features must be >= 1"),
            _ => Ok(()),
        }
    }
}

/// A family, its hyperparameters and the seed for its randomized parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: Hyperparams, seed: u64) -> Self {
        Self { params, seed }
    }

    pub fn default_for(family: Family, seed: u64) -> Self {
        Self::new(family.default_params(), seed)
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Model {
    Knn(KnnModel),
    DecisionTree(Tree),
    Svm(SvmModel),
    NaiveBayes(GaussianNb),
    LogisticRegression(LogisticModel),
    GradientBoosting(BoostedTrees),
    RandomForest(RandomForestModel),
}

/// A fitted model; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    spec: ModelSpec,
    n_features: usize,
    model: Model,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

const MODEL_FORMAT: &str = "voxpd-model";

fn validate_training(family: Family, x: &[Vec<f64>], y: &[Label]) -> Result<usize, ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LabelCount(y.len(), x.len()));
    }
    let min_rows = if family == Family::Knn { 1 } else { 2 };
    if x.len() < min_rows {
        return Err(ClassifierError::TooFewRows {
            family,
            required: min_rows,
            found: x.len(),
        });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(ClassifierError::DimensionMismatch { expected: 1, found: 0 });
    }
    for (r, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ClassifierError::DimensionMismatch { expected: d, found: row.len() });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite { row: r, col: c });
        }
    }
    let both = y.iter().any(|l| l.is_positive()) && y.iter().any(|l| !l.is_positive());
    if !both && family != Family::Knn {
        return Err(ClassifierError::SingleClass { family });
    }
    Ok(d)
}

fn gamma_scale(x: &[Vec<f64>]) -> f64 {
    let d = x[0].len();
    let n = (x.len() * d) as f64;
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// Fits `spec` to rows `x` with labels `y`.
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[Label]) -> Result<TrainedModel, ClassifierError> {
    spec.params.validate()?;
    let n_features = validate_training(spec.family(), x, y)?;
    let y01: Vec<f64> = y.iter().map(|l| l.index() as f64).collect();
    let model = match spec.params {
        Hyperparams::Knn { k } => Model::Knn(KnnModel::fit(k, x, y)),
        Hyperparams::DecisionTree { max_depth, min_leaf } => {
            let params = tree::TreeParams { max_depth, min_leaf, max_features: None };
            Model::DecisionTree(tree::grow_classifier(x, &y01, (0..x.len()).collect(), params, None))
        }
        Hyperparams::Svm { c, kernel, gamma } => {
            let kernel = match kernel {
                Kernel::Linear => ResolvedKernel::Linear,
                Kernel::Rbf => ResolvedKernel::Rbf {
                    gamma: match gamma {
                        Gamma::Value(g) => g,
                        Gamma::Heuristic(GammaHeuristic::Scale) => gamma_scale(x),
                    },
                },
            };
            let sign: Vec<f64> = y.iter().map(|l| l.sign()).collect();
            let smo = svm::SmoParams { c, tol: 1e-3, max_passes: 10, max_sweeps: 1000 };
            Model::Svm(SvmModel::fit(x, &sign, kernel, smo, spec.seed))
        }
        Hyperparams::NaiveBayes { var_floor } => Model::NaiveBayes(GaussianNb::fit(x, y, var_floor)),
        Hyperparams::LogisticRegression { lambda, tol, max_iter } => {
            Model::LogisticRegression(LogisticModel::fit(x, &y01, lambda, tol, max_iter))
        }
        Hyperparams::GradientBoosting { n_trees, learning_rate, max_depth } => {
            Model::GradientBoosting(BoostedTrees::fit(x, &y01, n_trees, learning_rate, max_depth))
        }
        Hyperparams::RandomForest { n_trees, max_features, bootstrap, max_depth, min_leaf } => {
            let params = tree::TreeParams {
                max_depth,
                min_leaf,
                max_features: Some(max_features.resolve(n_features)),
            };
            Model::RandomForest(RandomForestModel::fit(x, &y01, n_trees, params, bootstrap, spec.seed))
        }
    };
    Ok(TrainedModel { spec: spec.clone(), n_features, model })
}

impl TrainedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn check(&self, x: &[Vec<f64>]) -> Result<(), ClassifierError> {
        match x.iter().find(|r| r.len() != self.n_features) {
            Some(r) => Err(ClassifierError::DimensionMismatch {
                expected: self.n_features,
                found: r.len(),
            }),
            None => Ok(()),
        }
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.model {
            Model::Knn(m) => m.score(row),
            Model::DecisionTree(t) => t.predict(row),
            Model::Svm(m) => m.score(row),
            Model::NaiveBayes(m) => m.score(row),
            Model::LogisticRegression(m) => m.score(row),
            Model::GradientBoosting(m) => m.score(row),
            Model::RandomForest(m) => m.score(row),
        }
    }

    fn label_row(&self, row: &[f64]) -> Label {
        let positive = match &self.model {
            Model::Knn(m) => return m.label(row),
            Model::DecisionTree(_) | Model::RandomForest(_) => self.score_row(row) > 0.5,
            _ => self.score_row(row) > 0.0,
        };
        if positive {
            Label::Parkinson
        } else {
            Label::Healthy
        }
    }

    /// Decision values, increasing with PD confidence. Vote and leaf
    /// fractions lie in `[0, 1]`; margins and log-odds are unbounded.
    pub fn predict_score(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ClassifierError> {
        self.check(x)?;
        Ok(x.iter().map(|r| self.score_row(r)).collect())
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<Label>, ClassifierError> {
        self.check(x)?;
        Ok(x.iter().map(|r| self.label_row(r)).collect())
    }

    /// Writes the versioned JSON model file.
    pub fn save<W: Write>(&self, w: W) -> Result<(), ClassifierError> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer_pretty(w, &file).map_err(|e| ClassifierError::Persistence(e.to_string()))
    }

    pub fn load<R: Read>(r: R) -> Result<Self, ClassifierError> {
        let file: ModelFile = serde_json::from_reader(r).map_err(|e| ClassifierError::Persistence(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ClassifierError::Persistence(format!("unexpected format {:?}", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::Persistence(format!(
                "model version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        Ok(file.model)
    }
}

/// Fraction of matching labels.
pub fn accuracy(truth: &[Label], pred: &[Label]) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&a| vec![a]).collect()
    }

    fn labels(v: &[usize]) -> Vec<Label> {
        v.iter().map(|&i| Label::from_index(i)).collect()
    }

    #[test]
    fn knn_identity_and_majority() {
        let x = xs(&[0.0, 1.0, 2.0, 10.0]);
        let y = labels(&[0, 1, 1, 0]);
        let m = fit(&ModelSpec::new(Hyperparams::Knn { k: 1 }, 0), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        let m3 = fit(&ModelSpec::new(Hyperparams::Knn { k: 3 }, 0), &x, &y).unwrap();
        // nearest three to 1.2 are 1.0 (PD), 2.0 (PD), 0.0 (HC)
        assert_eq!(m3.predict(&[vec![1.2]]).unwrap(), vec![Label::Parkinson]);
    }

    #[test]
    fn knn_accepts_one_class() {
        let m = fit(&ModelSpec::new(Hyperparams::Knn { k: 1 }, 0), &xs(&[1.0]), &labels(&[1])).unwrap();
        assert_eq!(m.predict(&[vec![-4.0]]).unwrap(), vec![Label::Parkinson]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = xs(&[0.0, 1.0]);
        let spec = ModelSpec::default_for(Family::DecisionTree, 0);
        assert!(matches!(fit(&spec, &x, &labels(&[1, 1])), Err(ClassifierError::SingleClass { .. })));
        assert!(matches!(
            fit(&spec, &[vec![0.0], vec![f64::NAN]], &labels(&[0, 1])),
            Err(ClassifierError::NonFinite { row: 1, col: 0 })
        ));
        assert!(matches!(
            fit(&ModelSpec::new(Hyperparams::Knn { k: 2 }, 0), &x, &labels(&[0, 1])),
            Err(ClassifierError::InvalidSpec { .. })
        ));
        let m = fit(&spec, &x, &labels(&[0, 1])).unwrap();
        assert!(matches!(
            m.predict(&[vec![0.0, 1.0]]),
            Err(ClassifierError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn rbf_kernel_self_similarity_is_one() {
        let k = ResolvedKernel::Rbf { gamma: 0.7 };
        for row in [vec![0.0, 0.0], vec![3.5, -2.0], vec![1e3, 1e-3]] {
            assert_eq!(k.eval(&row, &row), 1.0);
        }
    }

    #[test]
    fn family_names() {
        assert_eq!(Family::ALL.map(Family::short_name), ["KNN", "DT", "SVM", "NB", "LR", "GB", "RF"]);
        assert_eq!(Family::parse("svm"), Some(Family::Svm));
        assert_eq!(Family::parse("RF"), Some(Family::RandomForest));
        assert_eq!(Family::parse("mlp"), None);
    }

    #[test]
    fn hyperparams_serde_shapes() {
        let p: Hyperparams = serde_json::from_str(r#"{"family":"svm","c":1.0,"kernel":"rbf","gamma":"scale"}"#).unwrap();
        assert_eq!(p, Family::Svm.default_params());
        let p: Hyperparams = serde_json::from_str(r#"{"family":"svm","c":1.0,"kernel":"rbf","gamma":0.1}"#).unwrap();
        assert!(matches!(p, Hyperparams::Svm { gamma: Gamma::Value(g), .. } if g == 0.1));
    }
}
