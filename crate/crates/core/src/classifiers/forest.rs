use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_classifier, Tree, TreeParams};
use crate::rng::{derive_seed, rng_from};

/// Bagged CART trees; each tree draws from its own seed stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    trees: Vec<Tree>,
}

impl RandomForestModel {
    pub(crate) fn fit(
        x: &[Vec<f64>],
        y01: &[f64],
        n_trees: usize,
        params: TreeParams,
        bootstrap: bool,
        seed: u64,
    ) -> Self {
        let n = x.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(derive_seed(seed, t as u64));
                let idx: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow_classifier(x, y01, idx, params, Some(&mut rng))
            })
            .collect();
        Self { trees }
    }

    /// Fraction of trees voting PD.
    pub fn score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(row) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}
