use serde::{Deserialize, Serialize};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `λ/2·‖w‖²` (bias unpenalized), with its gradient
/// `(∂/∂w, ∂/∂b)`.
pub fn log_loss_and_gradient(w: &[f64], b: f64, x: &[Vec<f64>], y01: &[f64], lambda: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &y) in x.iter().zip(y01) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        gb += r;
        for (g, &v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    let l2: f64 = w.iter().map(|v| v * v).sum();
    for (g, &wj) in gw.iter_mut().zip(w) {
        *g = *g / n + lambda * wj;
    }
    (loss / n + 0.5 * lambda * l2, gw, gb / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    weights: Vec<f64>,
    bias: f64,
    iterations: usize,
}

impl LogisticModel {
    /// Full-batch gradient descent with step `1/L`, `L` the Lipschitz bound
    /// `¼·mean(‖x‖² + 1) + λ`. Stops once the largest gradient component falls
    /// below `tol` or after `max_iter` steps.
    pub(crate) fn fit(x: &[Vec<f64>], y01: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Self {
        let d = x[0].len();
        let mean_sq = x.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).sum::<f64>() / x.len() as f64;
        let step = 1.0 / (0.25 * mean_sq + lambda);
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut iterations = 0;
        while iterations < max_iter {
            let (_, gw, gb) = log_loss_and_gradient(&w, b, x, y01, lambda);
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < tol {
                break;
            }
            for (wj, g) in w.iter_mut().zip(&gw) {
                *wj -= step * g;
            }
            b -= step * gb;
            iterations += 1;
        }
        Self { weights: w, bias: b, iterations }
    }

    /// Linear predictor (log-odds of PD).
    pub fn score(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>()
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.weights, self.bias)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}
