//! Soft-margin SVM trained by sequential minimal optimization.
//!
//! The working pair is the KKT violator `i` and the partner `j` maximizing
//! `|E_i − E_j|`; a seeded random partner is tried when that pair makes no
//! progress. Training stops after `max_passes` consecutive sweeps without an
//! update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolvedKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl ResolvedKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ResolvedKernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            ResolvedKernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    kernel: ResolvedKernel,
    support: Vec<Vec<f64>>,
    /// `α_i·y_i` per support vector.
    coef: Vec<f64>,
    bias: f64,
}

impl SvmModel {
    pub(crate) fn fit(x: &[Vec<f64>], sign: &[f64], kernel: ResolvedKernel, p: SmoParams, seed: u64) -> Self {
        let n = x.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(&x[i], &x[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        let kij = |i: usize, j: usize| gram[i * n + j];

        let mut rng = rng_from(seed);
        let mut alpha = vec![0.0; n];
        let mut b = 0.0;
        // f[i] = Σ α_l y_l K(l, i) + b
        let mut f = vec![0.0; n];
        let mut passes = 0;
        let mut sweeps = 0;

        let take_step = |i: usize, j: usize, alpha: &mut [f64], b: &mut f64, f: &mut [f64]| -> bool {
            if i == j {
                return false;
            }
            let (yi, yj) = (sign[i], sign[j]);
            let (ei, ej) = (f[i] - yi, f[j] - yj);
            let (ai, aj) = (alpha[i], alpha[j]);
            let (lo, hi) = if yi != yj {
                ((aj - ai).max(0.0), (p.c + aj - ai).min(p.c))
            } else {
                ((ai + aj - p.c).max(0.0), (ai + aj).min(p.c))
            };
            if hi - lo < 1e-12 {
                return false;
            }
            let eta = 2.0 * kij(i, j) - kij(i, i) - kij(j, j);
            if eta >= 0.0 {
                return false;
            }
            let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
            if (aj_new - aj).abs() < 1e-5 * (aj_new + aj + 1e-5) {
                return false;
            }
            let ai_new = ai + yi * yj * (aj - aj_new);
            let b1 = *b - ei - yi * (ai_new - ai) * kij(i, i) - yj * (aj_new - aj) * kij(i, j);
            let b2 = *b - ej - yi * (ai_new - ai) * kij(i, j) - yj * (aj_new - aj) * kij(j, j);
            let b_new = if ai_new > 0.0 && ai_new < p.c {
                b1
            } else if aj_new > 0.0 && aj_new < p.c {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            let (di, dj, db) = ((ai_new - ai) * yi, (aj_new - aj) * yj, b_new - *b);
            for (k, fk) in f.iter_mut().enumerate() {
                *fk += di * kij(i, k) + dj * kij(j, k) + db;
            }
            alpha[i] = ai_new;
            alpha[j] = aj_new;
            *b = b_new;
            true
        };

        while passes < p.max_passes && sweeps < p.max_sweeps {
            let mut changed = 0;
            for i in 0..n {
                let ri = (f[i] - sign[i]) * sign[i];
                let violates = (ri < -p.tol && alpha[i] < p.c) || (ri > p.tol && alpha[i] > 0.0);
                if !violates {
                    continue;
                }
                let ei = f[i] - sign[i];
                let j = (0..n)
                    .filter(|&j| j != i)
                    .max_by(|&a, &c| {
                        let da = (ei - (f[a] - sign[a])).abs();
                        let dc = (ei - (f[c] - sign[c])).abs();
                        da.total_cmp(&dc).then(c.cmp(&a))
                    })
                    .expect("n >= 2");
                if take_step(i, j, &mut alpha, &mut b, &mut f) {
                    changed += 1;
                    continue;
                }
                let mut r = rng.random_range(0..n - 1);
                if r >= i {
                    r += 1;
                }
                if take_step(i, r, &mut alpha, &mut b, &mut f) {
                    changed += 1;
                }
            }
            sweeps += 1;
            passes = if changed == 0 { passes + 1 } else { 0 };
        }

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for i in 0..n {
            if alpha[i] > 1e-12 {
                support.push(x[i].clone());
                coef.push(alpha[i] * sign[i]);
            }
        }
        Self { kernel, support, coef, bias: b }
    }

    /// Signed distance-like decision value; positive means PD.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.coef)
                .map(|(sv, c)| c * self.kernel.eval(sv, row))
                .sum::<f64>()
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn kernel(&self) -> ResolvedKernel {
        self.kernel
    }
}
