#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxpd::features::{FeatureMatrix, Label};

/// `n` rows, half per class, unit-variance Gaussians whose means are
/// `separation` apart along the diagonal of the first two axes.
pub fn blobs(n: usize, dims: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let shift = separation / 2f64.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = Label::from_index(i % 2);
        let row = (0..dims)
            .map(|d| {
                let centre = if label.is_positive() && d < 2 { shift } else { 0.0 };
                centre + noise.sample(&mut rng)
            })
            .collect();
        x.push(row);
        y.push(label);
    }
    (x, y)
}

pub fn blob_matrix(n: usize, dims: usize, separation: f64, seed: u64) -> FeatureMatrix<f64> {
    let (x, y) = blobs(n, dims, separation, seed);
    let names = (0..dims).map(|d| format!("f{d}")).collect();
    FeatureMatrix::from_rows(names, x, y).unwrap()
}
