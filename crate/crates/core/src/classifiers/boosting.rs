use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::tree::{grow_tree, Tree, TreeParams};

/// Additive log-odds model of depth-limited regression trees fitted to
/// log-loss pseudo-residuals, each leaf set by one Newton step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

impl BoostedTrees {
    pub(crate) fn fit(x: &[Vec<f64>], y01: &[f64], n_trees: usize, learning_rate: f64, max_depth: usize) -> Self {
        let n = x.len();
        let p0 = (y01.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (p0 / (1.0 - p0)).ln();
        let mut raw = vec![init; n];
        let params = TreeParams {
            max_depth: Some(max_depth),
            min_leaf: 1,
            max_features: None,
        };
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let p: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
            let residual: Vec<f64> = y01.iter().zip(&p).map(|(y, p)| y - p).collect();
            let hessian: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
            let tree = grow_tree(x, &residual, (0..n).collect(), params, None, |rows| {
                let num: f64 = rows.iter().map(|&i| residual[i]).sum();
                let den: f64 = rows.iter().map(|&i| hessian[i]).sum();
                num / den.max(1e-12)
            });
            for (f, row) in raw.iter_mut().zip(x) {
                *f += learning_rate * tree.predict(row);
            }
            trees.push(tree);
        }
        Self { init, learning_rate, trees }
    }

    /// Raw log-odds of PD.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
