//! Greedy binary regression/classification trees.
//!
//! Splits minimize the summed squared error of the children. On 0/1 targets
//! that is half the size-weighted Gini impurity, so the same builder serves
//! CART classification and the gradient-boosting regressors.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; all when `None`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub(crate) enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// `(feature, threshold)` of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

fn sse(n: f64, s: f64, s2: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        (s2 - s * s / n).max(0.0)
    }
}

struct Builder<'a, F: Fn(&[usize]) -> f64> {
    x: &'a [Vec<f64>],
    target: &'a [f64],
    params: TreeParams,
    leaf_value: F,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<F: Fn(&[usize]) -> f64> Builder<'_, F> {
    fn features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf.max(1);
        let n = idx.len();
        let (tot_s, tot_s2) = idx
            .iter()
            .fold((0.0, 0.0), |(s, s2), &i| (s + self.target[i], s2 + self.target[i] * self.target[i]));
        let parent = sse(n as f64, tot_s, tot_s2);
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for f in self.features() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut ls, mut ls2) = (0.0, 0.0);
            for p in 0..n - 1 {
                let t = self.target[order[p]];
                ls += t;
                ls2 += t * t;
                let left_n = p + 1;
                if left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let (a, b) = (self.x[order[p]][f], self.x[order[p + 1]][f]);
                if a == b {
                    continue;
                }
                let impurity = sse(left_n as f64, ls, ls2) + sse((n - left_n) as f64, tot_s - ls, tot_s2 - ls2);
                let better = match &best {
                    None => true,
                    Some(c) => impurity < c.impurity - 1e-12 * (1.0 + c.impurity.abs()),
                };
                if better {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Candidate { feature: f, threshold, impurity });
                }
            }
        }
        best.filter(|c| c.impurity < parent - 1e-12 * (1.0 + parent))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: (self.leaf_value)(&idx) });
        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        if !depth_ok || idx.len() < 2 * self.params.min_leaf.max(1) {
            return at;
        }
        let Some(split) = self.best_split(&idx) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows a tree over rows `idx` of `x` fitting `target`; leaves take
/// `leaf_value` of their rows.
pub(crate) fn grow_tree(
    x: &[Vec<f64>],
    target: &[f64],
    idx: Vec<usize>,
    params: TreeParams,
    rng: Option<&mut ChaCha8Rng>,
    leaf_value: impl Fn(&[usize]) -> f64,
) -> Tree {
    let mut b = Builder {
        x,
        target,
        params,
        leaf_value,
        rng,
        nodes: Vec::new(),
    };
    b.grow(idx, 0);
    Tree { nodes: b.nodes }
}

/// Classification tree whose leaves hold the PD fraction of their rows.
pub(crate) fn grow_classifier(
    x: &[Vec<f64>],
    y01: &[f64],
    idx: Vec<usize>,
    params: TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    grow_tree(x, y01, idx, params, rng, |rows| {
        rows.iter().map(|&i| y01[i]).sum::<f64>() / rows.len() as f64
    })
}
