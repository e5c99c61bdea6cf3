mod common;

use common::blobs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxpd::classifiers::{
    accuracy, fit, grid_search, log_loss_and_gradient, Family, Hyperparams, MaxFeatures, Model, ModelSpec, ParamGrid,
    TrainedModel,
};
use voxpd::features::{stratified_kfold, Grouping, Label};
use voxpd::rng::derive_seed;

fn take<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

fn cv_accuracy(spec: &ModelSpec, x: &[Vec<f64>], y: &[Label], k: usize, seed: u64) -> f64 {
    let ids: Vec<String> = (0..x.len()).map(|i| i.to_string()).collect();
    let folds = stratified_kfold(y, &ids, Grouping::Segment, k, seed).unwrap();
    let mut total = 0.0;
    for test in &folds {
        let train: Vec<usize> = (0..x.len()).filter(|i| !test.contains(i)).collect();
        let m = fit(spec, &take(x, &train), &take(y, &train)).unwrap();
        total += accuracy(&take(y, test), &m.predict(&take(x, test)).unwrap());
    }
    total / k as f64
}

#[test]
fn every_family_separates_blobs() {
    let (x, y) = blobs(200, 2, 4.0, 77);
    for family in Family::ALL {
        let spec = ModelSpec::default_for(family, 1);
        let model = fit(&spec, &x, &y).unwrap();
        let train = accuracy(&y, &model.predict(&x).unwrap());
        let cv = cv_accuracy(&spec, &x, &y, 6, 5);
        assert!(train >= 0.95, "{family}: train {train}");
        assert!(cv >= 0.90, "{family}: cv {cv}");
    }
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let (x, y) = blobs(60, 3, 2.0, 8);
    let y01: Vec<f64> = y.iter().map(|l| l.index() as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for lambda in [0.0, 0.1] {
        for _ in 0..20 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let (_, gw, gb) = log_loss_and_gradient(&w, b, &x, &y01, lambda);
            let h = 1e-6;
            for j in 0..3 {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[j] += h;
                wm[j] -= h;
                let fd = (log_loss_and_gradient(&wp, b, &x, &y01, lambda).0
                    - log_loss_and_gradient(&wm, b, &x, &y01, lambda).0)
                    / (2.0 * h);
                assert!((fd - gw[j]).abs() <= 1e-5 * gw[j].abs().max(1e-3), "w{j}: {fd} vs {}", gw[j]);
            }
            let fd = (log_loss_and_gradient(&w, b + h, &x, &y01, lambda).0
                - log_loss_and_gradient(&w, b - h, &x, &y01, lambda).0)
                / (2.0 * h);
            assert!((fd - gb).abs() <= 1e-5 * gb.abs().max(1e-3));
        }
    }
}

#[test]
fn single_unbagged_forest_equals_cart() {
    let (x, y) = blobs(120, 4, 1.5, 21);
    let cart = fit(&ModelSpec::new(Hyperparams::DecisionTree { max_depth: None, min_leaf: 1 }, 0), &x, &y).unwrap();
    let forest = fit(
        &ModelSpec::new(
            Hyperparams::RandomForest {
                n_trees: 1,
                max_features: MaxFeatures::All,
                bootstrap: false,
                max_depth: None,
                min_leaf: 1,
            },
            99,
        ),
        &x,
        &y,
    )
    .unwrap();
    let (Model::DecisionTree(t), Model::RandomForest(f)) = (cart.model(), forest.model()) else {
        panic!("unexpected model kinds");
    };
    assert_eq!(&f.trees()[0], t);
    let (qx, _) = blobs(200, 4, 1.5, 22);
    assert_eq!(cart.predict(&qx).unwrap(), forest.predict(&qx).unwrap());
}

#[test]
fn knn_with_all_points_predicts_majority() {
    let (x, mut y) = blobs(41, 2, 3.0, 31);
    y[0] = Label::Parkinson; // 21 PD, 20 HC
    let majority = if y.iter().filter(|l| l.is_positive()).count() * 2 > y.len() {
        Label::Parkinson
    } else {
        Label::Healthy
    };
    let m = fit(&ModelSpec::new(Hyperparams::Knn { k: 41 }, 0), &x, &y).unwrap();
    let (q, _) = blobs(50, 2, 8.0, 32);
    assert!(m.predict(&q).unwrap().iter().all(|&l| l == majority));
}

#[test]
fn fits_are_deterministic_across_thread_counts() {
    let (x, y) = blobs(150, 3, 2.0, 41);
    let (q, _) = blobs(60, 3, 2.0, 42);
    for family in Family::ALL {
        let spec = ModelSpec::default_for(family, 12);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit(&spec, &x, &y).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a, b, "{family}");
        let (sa, sb) = (a.predict_score(&q).unwrap(), b.predict_score(&q).unwrap());
        assert!(sa.iter().zip(&sb).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn naive_bayes_threshold_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..4000 {
        let label = Label::from_index(i % 2);
        x.push(vec![label.sign() + noise.sample(&mut rng)]);
        y.push(label);
    }
    let m = fit(&ModelSpec::default_for(Family::NaiveBayes, 0), &x, &y).unwrap();
    let score = |v: f64| m.predict_score(&[vec![v]]).unwrap()[0];
    let (mut lo, mut hi) = (-1.0, 1.0);
    assert!(score(lo) < 0.0 && score(hi) > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!(lo.abs() < 0.05, "threshold {lo}");
}

#[test]
fn cart_splits_between_classes() {
    let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
    let y = [0, 0, 1, 1].map(Label::from_index).to_vec();
    let m = fit(&ModelSpec::default_for(Family::DecisionTree, 0), &x, &y).unwrap();
    let Model::DecisionTree(t) = m.model() else { panic!() };
    let (feature, threshold) = t.root_split().unwrap();
    assert_eq!(feature, 0);
    assert!(threshold > 2.0 && threshold < 3.0, "{threshold}");
    assert_eq!(m.predict(&x).unwrap(), y);
    assert_eq!(t.depth(), 1);
}

#[test]
fn logistic_fits_separable_blobs_exactly() {
    let (x, y) = blobs(100, 2, 10.0, 61);
    let m = fit(&ModelSpec::default_for(Family::LogisticRegression, 0), &x, &y).unwrap();
    assert_eq!(accuracy(&y, &m.predict(&x).unwrap()), 1.0);
}

#[test]
fn persisted_models_reload_and_predict_identically() {
    let (x, y) = blobs(80, 3, 2.5, 71);
    for family in Family::ALL {
        let m = fit(&ModelSpec::default_for(family, 3), &x, &y).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = TrainedModel::load(buf.as_slice()).unwrap();
        assert_eq!(back.predict_score(&x).unwrap(), m.predict_score(&x).unwrap(), "{family}");
        assert_eq!(back, m);
    }
    let m = fit(&ModelSpec::default_for(Family::Knn, 3), &x, &y).unwrap();
    let mut buf = Vec::new();
    m.save(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replace("\"version\": 1", "\"version\": 99");
    assert!(TrainedModel::load(text.as_bytes()).is_err());
}

#[test]
fn knn_grid_prefers_small_k() {
    let (x, y) = blobs(60, 2, 5.0, 81);
    let grid = ParamGrid::Knn { k: vec![1, 51] };
    let seed = 17;
    let r = grid_search(&grid, &x, &y, None, 6, seed).unwrap();
    assert_eq!(r.best.params, Hyperparams::Knn { k: 1 });

    // same folds, evaluated by brute force: nearest neighbour versus whole-set vote
    let ids: Vec<String> = (0..60).map(|i| i.to_string()).collect();
    let folds = stratified_kfold(&y, &ids, Grouping::Segment, 6, derive_seed(seed, 0)).unwrap();
    let brute = |k: usize| {
        let mut acc = 0.0;
        for test in &folds {
            let train: Vec<usize> = (0..60).filter(|i| !test.contains(i)).collect();
            let mut hits = 0;
            for &q in test {
                let mut d: Vec<(f64, usize)> = train
                    .iter()
                    .map(|&t| ((x[t][0] - x[q][0]).powi(2) + (x[t][1] - x[q][1]).powi(2), t))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let nb: Vec<usize> = d.iter().take(k).map(|p| p.1).collect();
                let pos = nb.iter().filter(|&&i| y[i].is_positive()).count();
                let pred = if 2 * pos > nb.len() {
                    Label::Parkinson
                } else if 2 * pos < nb.len() {
                    Label::Healthy
                } else {
                    y[nb[0]]
                };
                hits += usize::from(pred == y[q]);
            }
            acc += hits as f64 / test.len() as f64;
        }
        acc / folds.len() as f64
    };
    assert!((r.cells[0].mean_accuracy.unwrap() - brute(1)).abs() < 1e-12);
    assert!((r.cells[1].mean_accuracy.unwrap() - brute(51)).abs() < 1e-12);
    // balanced training folds make every 51-vote a tie, which falls to the
    // nearest neighbour, so k = 51 cannot beat k = 1 and loses the tie on order
    assert!(brute(1) >= brute(51));
}
