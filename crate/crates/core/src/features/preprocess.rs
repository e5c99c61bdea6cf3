use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix};
use crate::scalar::{quantile_sorted, Real};

/// Per-column winsorization bounds `[Q1 − 1.5·IQR, Q3 + 1.5·IQR]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierBounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> OutlierBounds<T> {
    pub fn fit(train: &FeatureMatrix<T>) -> Result<Self, FeatureError> {
        if train.n_rows() < 4 {
            return Err(FeatureError::InvalidMatrix(format!(
                "outlier bounds need at least 4 rows, got {}",
                train.n_rows()
            )));
        }
        let k = T::of(1.5);
        let (lower, upper) = (0..train.n_cols())
            .map(|j| {
                let mut col = train.column(j);
                col.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let q1 = quantile_sorted(&col, 0.25);
                let q3 = quantile_sorted(&col, 0.75);
                let iqr = q3 - q1;
                (q1 - k * iqr, q3 + k * iqr)
            })
            .unzip();
        Ok(Self { lower, upper })
    }

    /// Clips every value into its column's bounds.
    pub fn apply(&self, m: &FeatureMatrix<T>) -> FeatureMatrix<T> {
        let rows = m
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .zip(self.lower.iter().zip(&self.upper))
                    .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
                    .collect()
            })
            .collect();
        m.with_rows(rows)
    }
}

/// Fits IQR bounds on `train` and winsorizes it.
pub fn outlier_clip<T: Real>(train: &FeatureMatrix<T>) -> Result<(FeatureMatrix<T>, OutlierBounds<T>), FeatureError> {
    let bounds = OutlierBounds::fit(train)?;
    Ok((bounds.apply(train), bounds))
}

/// Column minima and maxima learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

pub fn fit_min_max<T: Real>(train: &FeatureMatrix<T>) -> Result<ScalerParams<T>, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::InvalidMatrix("cannot fit a scaler on zero rows".into()));
    }
    let mut min = train.rows()[0].clone();
    let mut max = min.clone();
    for r in &train.rows()[1..] {
        for (j, &v) in r.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(ScalerParams { min, max })
}

/// `(x − min)/(max − min)`, unclamped; constant training columns map to 0.
pub fn apply_min_max<T: Real>(params: &ScalerParams<T>, m: &FeatureMatrix<T>) -> FeatureMatrix<T> {
    let rows = m
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let span = params.max[j] - params.min[j];
                    if span > T::zero() {
                        (v - params.min[j]) / span
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();
    m.with_rows(rows)
}
