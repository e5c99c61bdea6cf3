mod common;

use common::blob_matrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voxpd::classifiers::{Family, ModelSpec};
use voxpd::eval::{
    fold_partitions, metrics, repeated_kfold, ConfusionCounts, CvConfig, FoldPreprocessor, Metric, ModelPlan,
};
use voxpd::features::{
    anova_f_scores, read_feature_csv, write_feature_csv, FeatureMatrix, FeatureSet, Grouping, Label, FEATURE_NAMES,
};

proptest! {
    #[test]
    fn accuracy_is_prior_weighted_recall_and_specificity(
        tp in 0usize..500, fp in 0usize..500, tn in 0usize..500, fn_ in 0usize..500
    ) {
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        prop_assume!(c.positives() > 0 && c.negatives() > 0);
        let m = metrics(&c).unwrap();
        let (p, n) = (c.positives() as f64, c.negatives() as f64);
        prop_assert!((m.accuracy - (m.recall * p + m.specificity * n) / (p + n)).abs() < 1e-12);
    }

    #[test]
    fn anova_is_affine_invariant(seed in any::<u64>(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let m = blob_matrix(40, 3, 1.0, seed);
        let moved = m.with_rows(m.rows().iter().map(|r| r.iter().map(|v| a * v + b).collect()).collect());
        let (s0, s1) = (anova_f_scores(&m).unwrap(), anova_f_scores(&moved).unwrap());
        for (x, y) in s0.scores.iter().zip(&s1.scores) {
            prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{} vs {}", x, y);
        }
        prop_assert_eq!(s0.ranking, s1.ranking);
    }
}

fn quick_cfg(seed: u64) -> CvConfig {
    CvConfig { k: 6, repeats: 3, seed, grouping: Grouping::Segment }
}

#[test]
fn fold_means_lie_within_fold_range() {
    let m = blob_matrix(120, 3, 1.5, 1);
    let r = repeated_kfold(&m, FeatureSet::SelectedK(2), &ModelPlan::Fixed(ModelSpec::default_for(Family::Knn, 0)), &quick_cfg(2)).unwrap();
    let e = &r.entries[0];
    assert_eq!(e.folds.len(), 18);
    for metric in Metric::ALL {
        let vals: Vec<f64> = e.folds.iter().map(|f| f.metrics.get(metric)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= e.mean.get(metric) && e.mean.get(metric) <= hi);
    }
}

#[test]
fn shuffled_labels_give_chance_accuracy() {
    let m = blob_matrix(200, 3, 4.0, 3);
    let mut labels = m.labels().to_vec();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let shuffled = m.with_labels(labels);
    let cfg = CvConfig { k: 6, repeats: 5, seed: 5, grouping: Grouping::Segment };
    let plan = ModelPlan::Fixed(ModelSpec::default_for(Family::LogisticRegression, 0));
    let acc = repeated_kfold(&shuffled, FeatureSet::SelectedK(3), &plan, &cfg).unwrap().entries[0].mean.accuracy;
    assert!((acc - 0.5).abs() <= 0.1, "{acc}");
    let real = repeated_kfold(&m, FeatureSet::SelectedK(3), &plan, &cfg).unwrap().entries[0].mean.accuracy;
    assert!(real > 0.9, "{real}");
}

#[test]
fn repeated_kfold_is_reproducible() {
    let m = blob_matrix(90, 3, 2.0, 6);
    let plan = ModelPlan::Fixed(ModelSpec::default_for(Family::RandomForest, 8));
    let a = repeated_kfold(&m, FeatureSet::SelectedK(3), &plan, &quick_cfg(9)).unwrap();
    let b = repeated_kfold(&m, FeatureSet::SelectedK(3), &plan, &quick_cfg(9)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = repeated_kfold(&m, FeatureSet::SelectedK(3), &plan, &quick_cfg(10)).unwrap();
    assert_ne!(a, c);
}

/// Held-out rows carry sentinel values that would dominate any min/max or
/// quantile they leaked into.
#[test]
fn fold_preprocessing_sees_training_rows_only() {
    let m = blob_matrix(60, 3, 1.0, 7);
    let parts = fold_partitions(&m, &quick_cfg(1)).unwrap();
    for test in &parts[0] {
        let mut rows = m.rows().to_vec();
        for &i in test {
            rows[i] = vec![1e9, -1e9, 1e9];
        }
        let instrumented = m.with_rows(rows);
        let train_idx: Vec<usize> = (0..60).filter(|i| !test.contains(i)).collect();
        let train = instrumented.subset_rows(&train_idx);
        let clean_train = m.subset_rows(&train_idx);
        let p = FoldPreprocessor::fit(&train, FeatureSet::SelectedK(3)).unwrap();
        assert_eq!(p, FoldPreprocessor::fit(&clean_train, FeatureSet::SelectedK(3)).unwrap());
        for j in 0..3 {
            assert!(p.scaler().min[j].abs() < 1e3 && p.scaler().max[j].abs() < 1e3);
        }
        let held = p.apply(&instrumented.subset_rows(test));
        assert!(held.rows().iter().flatten().all(|v| v.is_finite()));
        // validation rows refit their own scaler differently
        let own = FoldPreprocessor::fit(&m.subset_rows(test), FeatureSet::SelectedK(3)).unwrap();
        assert_ne!(own.scaler(), p.scaler());
    }
}

#[test]
fn feature_csv_keeps_canonical_order() {
    let rows: Vec<Vec<f64>> = (0..6).map(|i| (0..24).map(|j| (i * 24 + j) as f64 * 0.5).collect()).collect();
    let labels = (0..6).map(|i| Label::from_index(i % 2)).collect();
    let m = FeatureMatrix::from_rows(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), rows, labels).unwrap();
    let mut buf = Vec::new();
    write_feature_csv(&m, &mut buf, &[]).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..24], &FEATURE_NAMES[..]);
    let back = read_feature_csv(buf.as_slice()).unwrap();
    assert_eq!(back.rows(), m.rows());
    assert_eq!(back.names(), m.names());
}
