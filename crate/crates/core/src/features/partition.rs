use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix, Label};
use crate::rng::rng_from;
use crate::scalar::Real;

/// Unit of partitioning: individual rows, or all rows of one subject together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    Segment,
    Subject,
}

/// Partition units per class; each unit is a list of row indices.
fn units_by_class(
    labels: &[Label],
    subjects: &[String],
    grouping: Grouping,
) -> Result<[Vec<Vec<usize>>; 2], FeatureError> {
    let mut out: [Vec<Vec<usize>>; 2] = [Vec::new(), Vec::new()];
    match grouping {
        Grouping::Segment => {
            for (i, l) in labels.iter().enumerate() {
                out[l.index()].push(vec![i]);
            }
        }
        Grouping::Subject => {
            let mut by_subject: BTreeMap<&str, (Label, Vec<usize>)> = BTreeMap::new();
            for (i, (l, s)) in labels.iter().zip(subjects).enumerate() {
                let entry = by_subject.entry(s.as_str()).or_insert((*l, Vec::new()));
                if entry.0 != *l {
                    return Err(FeatureError::InvalidMatrix(format!(
                        "subject {s:?} carries both labels"
                    )));
                }
                entry.1.push(i);
            }
            for (_, (l, rows)) in by_subject {
                out[l.index()].push(rows);
            }
        }
    }
    Ok(out)
}

/// Stratified split into `(train, validation)`, deterministic in `seed`.
pub fn split_train_validation<T: Real>(
    m: &FeatureMatrix<T>,
    train_fraction: f64,
    seed: u64,
    grouping: Grouping,
) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>), FeatureError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(FeatureError::InvalidMatrix(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let classes = units_by_class(m.labels(), m.subjects(), grouping)?;
    let mut rng = rng_from(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (c, mut units) in classes.into_iter().enumerate() {
        if units.len() < 2 {
            return Err(FeatureError::ClassTooSmall(
                Label::from_index(c),
                format!("{} partition units, split needs 2", units.len()),
            ));
        }
        units.shuffle(&mut rng);
        let n_train = ((units.len() as f64 * train_fraction).round() as usize).clamp(1, units.len() - 1);
        for (i, u) in units.into_iter().enumerate() {
            if i < n_train {
                train.extend(u);
            } else {
                val.extend(u);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((m.subset_rows(&train), m.subset_rows(&val)))
}

/// Test-fold row indices of a stratified `k`-fold partition.
///
/// Units of each class are shuffled and each is placed in the fold currently
/// holding the fewest rows, lowest fold index first.
pub fn stratified_kfold(
    labels: &[Label],
    subjects: &[String],
    grouping: Grouping,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, FeatureError> {
    if k < 2 {
        return Err(FeatureError::InvalidMatrix(format!("k-fold needs k >= 2, got {k}")));
    }
    let classes = units_by_class(labels, subjects, grouping)?;
    let mut rng = rng_from(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (c, mut units) in classes.into_iter().enumerate() {
        if units.len() < k {
            return Err(FeatureError::ClassTooSmall(
                Label::from_index(c),
                format!("{} partition units for {k} folds", units.len()),
            ));
        }
        units.shuffle(&mut rng);
        let mut class_rows = vec![0usize; k];
        for u in units {
            let f = (0..k)
                .min_by_key(|&f| (class_rows[f], folds[f].len(), f))
                .expect("k >= 2");
            class_rows[f] += u.len();
            folds[f].extend(u);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
