//! Confusion counts, binary metrics and the repeated k-fold protocol.

mod cv;
mod report;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::features::{FeatureError, Label};

pub use cv::{
    fold_partitions, repeated_kfold, tune_holdout, CvConfig, CvEntry, CvReport, FoldPreprocessor, FoldRecord,
    MetricStats, ModelPlan,
};
pub use report::{format_percent, render_report, ReportFormat};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} true labels but {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("no evaluated rows")]
    Empty,
    #[error("invalid cross-validation settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Binary confusion counts with PD as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionCounts, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Specificity,
    Recall,
    Precision,
    F1,
}

impl Metric {
    /// Table row order.
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::Specificity,
        Metric::Recall,
        Metric::Precision,
        Metric::F1,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::Specificity => "Specificity",
            Metric::Recall => "Recall",
            Metric::Precision => "Precision",
            Metric::F1 => "F1 score",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

/// Set when a metric's denominator was zero and it is reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub recall: bool,
    pub specificity: bool,
    pub precision: bool,
    pub f1: bool,
}

impl Degeneracy {
    pub fn any(&self) -> bool {
        self.recall || self.specificity || self.precision || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub specificity: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub degenerate: Degeneracy,
}

impl MetricSet {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::Specificity => self.specificity,
            Metric::Recall => self.recall,
            Metric::Precision => self.precision,
            Metric::F1 => self.f1,
        }
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricSet, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let (recall, dr) = ratio(c.tp, c.tp + c.fn_);
    let (specificity, ds) = ratio(c.tn, c.tn + c.fp);
    let (precision, dp) = ratio(c.tp, c.tp + c.fp);
    let (f1, df) = if dr || dp || precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    Ok(MetricSet {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        specificity,
        recall,
        precision,
        f1,
        degenerate: Degeneracy {
            recall: dr,
            specificity: ds,
            precision: dp,
            f1: df,
        },
    })
}
