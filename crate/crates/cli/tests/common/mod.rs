#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxpd::audio_io::write_wav_i16;
use voxpd::features::{write_feature_csv, FeatureMatrix, Label, Provenance};
use voxpd::AudioClipF64;

pub const SR: u32 = 16_000;

/// Harmonic voice-like signal whose cycle lengths and amplitudes vary by
/// the given relative jitter and shimmer.
pub fn voice(f0: f64, secs: f64, jitter: f64, shimmer: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let total = (secs * SR as f64) as usize;
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let period = (SR as f64 / f0) * (1.0 + jitter * n01.sample(&mut rng));
        let amp = 0.35 * (1.0 + shimmer * n01.sample(&mut rng)).max(0.2);
        let len = period.round().max(2.0) as usize;
        for t in 0..len {
            let phase = t as f64 / len as f64;
            let v = amp
                * ((2.0 * PI * phase).sin() + 0.4 * (4.0 * PI * phase).sin() + 0.2 * (6.0 * PI * phase).sin())
                / 1.6;
            out.push(v + 0.002 * n01.sample(&mut rng));
        }
    }
    out.truncate(total);
    out
}

pub fn write_wav(path: &Path, samples: Vec<f64>) {
    let clip = AudioClipF64::new(samples, SR, path.display().to_string()).unwrap();
    write_wav_i16(&clip, path).unwrap();
}

/// Canonical 24-column table; PD means sit `separation` standard deviations
/// above HC in every column.
pub fn separable_table(n_per_class: usize, separation: f64, seed: u64) -> FeatureMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let mut m = FeatureMatrix::canonical();
    for i in 0..2 * n_per_class {
        let label = Label::from_index(i % 2);
        let shift = if label.is_positive() { separation } else { 0.0 };
        let row = (0..24).map(|j| 10.0 + j as f64 + shift + n01.sample(&mut rng)).collect();
        m.push(
            row,
            label,
            format!("{}{:03}", if label.is_positive() { "pd" } else { "hc" }, i / 2),
            Provenance { source: format!("row{i}.wav"), segment: None },
        )
        .unwrap();
    }
    m
}

pub fn write_table(m: &FeatureMatrix<f64>, path: &Path) {
    let mut buf = Vec::new();
    write_feature_csv(m, &mut buf, &[]).unwrap();
    std::fs::write(path, buf).unwrap();
}

/// Small grids so whole-pipeline tests stay quick.
pub const FAST_CONFIG: &str = r#"
seed = 2024
name = "synthetic"

[evaluation]
feature_sets = ["acoustic_11"]
families = ["knn", "decision_tree", "svm", "naive_bayes", "logistic_regression", "gradient_boosting", "random_forest"]

[evaluation.cv]
k = 6
repeats = 2

[evaluation.tuning]
mode = "holdout"
inner_folds = 3

[[evaluation.grids]]
family = "knn"
k = [1, 5]

[[evaluation.grids]]
family = "decision_tree"
max_depth = [3]
min_leaf = [1, 5]

[[evaluation.grids]]
family = "svm"
c = [1.0]
kernel = ["linear", "rbf"]
gamma = ["scale"]

[[evaluation.grids]]
family = "gradient_boosting"
n_trees = [20]
learning_rate = [0.1]
max_depth = [1, 2]

[[evaluation.grids]]
family = "random_forest"
n_trees = [25]
max_features = ["sqrt"]
"#;
