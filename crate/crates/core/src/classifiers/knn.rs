use serde::{Deserialize, Serialize};

use crate::features::Label;

/// Stores the training set; prediction is a majority vote of the `k` nearest
/// rows by Euclidean distance, distance ties broken by training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl KnnModel {
    pub(crate) fn fit(k: usize, x: &[Vec<f64>], y: &[Label]) -> Self {
        Self {
            k,
            rows: x.to_vec(),
            labels: y.to_vec(),
        }
    }

    fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k.min(self.rows.len())).map(|(_, i)| i).collect()
    }

    /// Fraction of PD among the neighbours.
    pub fn score(&self, row: &[f64]) -> f64 {
        let nb = self.neighbours(row);
        nb.iter().filter(|&&i| self.labels[i].is_positive()).count() as f64 / nb.len() as f64
    }

    /// Majority label; an even split goes to the nearest neighbour.
    pub fn label(&self, row: &[f64]) -> Label {
        let nb = self.neighbours(row);
        let pos = nb.iter().filter(|&&i| self.labels[i].is_positive()).count();
        match (2 * pos).cmp(&nb.len()) {
            std::cmp::Ordering::Greater => Label::Parkinson,
            std::cmp::Ordering::Less => Label::Healthy,
            std::cmp::Ordering::Equal => self.labels[nb[0]],
        }
    }
}
