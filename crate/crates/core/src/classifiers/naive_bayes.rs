use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::features::Label;

/// Gaussian naive Bayes with per-class diagonal variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    means: [Vec<f64>; 2],
    vars: [Vec<f64>; 2],
}

impl GaussianNb {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[Label], var_floor: f64) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut log_prior = [0.0; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        let mut vars = [vec![0.0; d], vec![0.0; d]];
        for c in 0..2 {
            let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, l)| l.index() == c).map(|(r, _)| r).collect();
            let nc = rows.len() as f64;
            log_prior[c] = (nc / n).ln();
            for j in 0..d {
                let m = rows.iter().map(|r| r[j]).sum::<f64>() / nc;
                let v = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / nc;
                means[c][j] = m;
                vars[c][j] = v.max(var_floor);
            }
        }
        Self { log_prior, means, vars }
    }

    fn log_joint(&self, c: usize, row: &[f64]) -> f64 {
        self.log_prior[c]
            + row
                .iter()
                .zip(self.means[c].iter().zip(&self.vars[c]))
                .map(|(&v, (&m, &s2))| -0.5 * (2.0 * PI * s2).ln() - (v - m).powi(2) / (2.0 * s2))
                .sum::<f64>()
    }

    /// Posterior log-odds of PD.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.log_joint(1, row) - self.log_joint(0, row)
    }
}
