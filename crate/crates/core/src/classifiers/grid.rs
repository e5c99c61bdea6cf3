//! Exhaustive hyperparameter search by inner stratified k-fold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, fit, ClassifierError, Family, Gamma, GammaHeuristic, Hyperparams, Kernel, MaxFeatures, ModelSpec};
use crate::features::{stratified_kfold, Grouping, Label};
use crate::rng::derive_seed;

/// Candidate values per hyperparameter; the search runs over their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamGrid {
    Knn {
        k: Vec<usize>,
    },
    DecisionTree {
        max_depth: Vec<Option<usize>>,
        min_leaf: Vec<usize>,
    },
    Svm {
        c: Vec<f64>,
        kernel: Vec<Kernel>,
        gamma: Vec<Gamma>,
    },
    NaiveBayes {
        var_floor: Vec<f64>,
    },
    LogisticRegression {
        lambda: Vec<f64>,
    },
    GradientBoosting {
        n_trees: Vec<usize>,
        learning_rate: Vec<f64>,
        max_depth: Vec<usize>,
    },
    RandomForest {
        n_trees: Vec<usize>,
        max_features: Vec<MaxFeatures>,
    },
}

impl ParamGrid {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Knn => ParamGrid::Knn { k: vec![1, 3, 5, 7, 9, 11] },
            Family::DecisionTree => ParamGrid::DecisionTree {
                max_depth: vec![Some(3), Some(5), Some(8), None],
                min_leaf: vec![1, 5],
            },
            Family::Svm => ParamGrid::Svm {
                c: vec![0.1, 1.0, 10.0, 100.0],
                kernel: vec![Kernel::Linear, Kernel::Rbf],
                gamma: vec![
                    Gamma::Heuristic(GammaHeuristic::Scale),
                    Gamma::Value(0.01),
                    Gamma::Value(0.1),
                    Gamma::Value(1.0),
                ],
            },
            Family::NaiveBayes => ParamGrid::NaiveBayes { var_floor: vec![1e-9] },
            Family::LogisticRegression => ParamGrid::LogisticRegression {
                lambda: vec![0.0, 0.01, 0.1, 1.0],
            },
            Family::GradientBoosting => ParamGrid::GradientBoosting {
                n_trees: vec![50, 100, 200],
                learning_rate: vec![0.05, 0.1, 0.3],
                max_depth: vec![1, 2, 3],
            },
            Family::RandomForest => ParamGrid::RandomForest {
                n_trees: vec![100, 200],
                max_features: vec![MaxFeatures::Sqrt, MaxFeatures::All],
            },
        }
    }

    /// A grid holding exactly `params`.
    pub fn single(params: &Hyperparams) -> Self {
        match params.clone() {
            Hyperparams::Knn { k } => ParamGrid::Knn { k: vec![k] },
            Hyperparams::DecisionTree { max_depth, min_leaf } => ParamGrid::DecisionTree {
                max_depth: vec![max_depth],
                min_leaf: vec![min_leaf],
            },
            Hyperparams::Svm { c, kernel, gamma } => ParamGrid::Svm {
                c: vec![c],
                kernel: vec![kernel],
                gamma: vec![gamma],
            },
            Hyperparams::NaiveBayes { var_floor } => ParamGrid::NaiveBayes { var_floor: vec![var_floor] },
            Hyperparams::LogisticRegression { lambda, .. } => ParamGrid::LogisticRegression { lambda: vec![lambda] },
            Hyperparams::GradientBoosting { n_trees, learning_rate, max_depth } => ParamGrid::GradientBoosting {
                n_trees: vec![n_trees],
                learning_rate: vec![learning_rate],
                max_depth: vec![max_depth],
            },
            Hyperparams::RandomForest { n_trees, max_features, .. } => ParamGrid::RandomForest {
                n_trees: vec![n_trees],
                max_features: vec![max_features],
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ParamGrid::Knn { .. } => Family::Knn,
            ParamGrid::DecisionTree { .. } => Family::DecisionTree,
            ParamGrid::Svm { .. } => Family::Svm,
            ParamGrid::NaiveBayes { .. } => Family::NaiveBayes,
            ParamGrid::LogisticRegression { .. } => Family::LogisticRegression,
            ParamGrid::GradientBoosting { .. } => Family::GradientBoosting,
            ParamGrid::RandomForest { .. } => Family::RandomForest,
        }
    }

    /// Cells in row-major order of the declared lists. Gamma is irrelevant
    /// to the linear kernel, so linear cells appear once per C.
    pub fn cells(&self) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        match self {
            ParamGrid::Knn { k } => out.extend(k.iter().map(|&k| Hyperparams::Knn { k })),
            ParamGrid::DecisionTree { max_depth, min_leaf } => {
                for &max_depth in max_depth {
                    for &min_leaf in min_leaf {
                        out.push(Hyperparams::DecisionTree { max_depth, min_leaf });
                    }
                }
            }
            ParamGrid::Svm { c, kernel, gamma } => {
                for &c in c {
                    for &kernel in kernel {
                        match kernel {
                            Kernel::Linear if !gamma.is_empty() => out.push(Hyperparams::Svm {
                                c,
                                kernel,
                                gamma: gamma[0],
                            }),
                            _ => out.extend(gamma.iter().map(|&gamma| Hyperparams::Svm { c, kernel, gamma })),
                        }
                    }
                }
            }
            ParamGrid::NaiveBayes { var_floor } => {
                out.extend(var_floor.iter().map(|&var_floor| Hyperparams::NaiveBayes { var_floor }))
            }
            ParamGrid::LogisticRegression { lambda } => {
                let Hyperparams::LogisticRegression { tol, max_iter, .. } = Family::LogisticRegression.default_params()
                else {
                    unreachable!()
                };
                out.extend(lambda.iter().map(|&lambda| Hyperparams::LogisticRegression { lambda, tol, max_iter }));
            }
            ParamGrid::GradientBoosting { n_trees, learning_rate, max_depth } => {
                for &n_trees in n_trees {
                    for &learning_rate in learning_rate {
                        for &max_depth in max_depth {
                            out.push(Hyperparams::GradientBoosting { n_trees, learning_rate, max_depth });
                        }
                    }
                }
            }
            ParamGrid::RandomForest { n_trees, max_features } => {
                for &n_trees in n_trees {
                    for &max_features in max_features {
                        out.push(Hyperparams::RandomForest {
                            n_trees,
                            max_features,
                            bootstrap: true,
                            max_depth: None,
                            min_leaf: 1,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: Hyperparams,
    /// Mean inner-fold accuracy; `None` when the cell failed to fit.
    pub mean_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ModelSpec,
    /// Empty when the family bypasses search.
    pub cells: Vec<GridCell>,
}

fn take<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

fn cell_accuracy(
    params: &Hyperparams,
    x: &[Vec<f64>],
    y: &[Label],
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<f64, ClassifierError> {
    params.validate()?;
    let n = x.len();
    let mut total = 0.0;
    for (f, test) in folds.iter().enumerate() {
        let mut in_test = vec![false; n];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let spec = ModelSpec::new(params.clone(), derive_seed(seed, f as u64));
        let model = fit(&spec, &take(x, &train), &take(y, &train))?;
        let pred = model.predict(&take(x, test))?;
        total += accuracy(&take(y, test), &pred);
    }
    Ok(total / folds.len() as f64)
}

/// Scores every cell of `grid` by `folds`-fold stratified CV on `(x, y)` and
/// returns the most accurate, earliest cell winning ties. `subjects`, when
/// given, keeps each subject's rows inside one inner fold.
pub fn grid_search(
    grid: &ParamGrid,
    x: &[Vec<f64>],
    y: &[Label],
    subjects: Option<&[String]>,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult, ClassifierError> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(ClassifierError::InvalidSpec {
            family: grid.family(),
            reason: "empty grid".into(),
        });
    }
    let model_seed = derive_seed(seed, 1);
    if grid.family() == Family::NaiveBayes {
        return Ok(GridSearchResult {
            best: ModelSpec::new(cells[0].clone(), model_seed),
            cells: Vec::new(),
        });
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LabelCount(y.len(), x.len()));
    }
    let (grouping, ids) = match subjects {
        Some(s) => (Grouping::Subject, s.to_vec()),
        None => (Grouping::Segment, (0..x.len()).map(|i| i.to_string()).collect()),
    };
    let fold_sets = stratified_kfold(y, &ids, grouping, folds, derive_seed(seed, 0))?;

    let scored: Vec<GridCell> = cells
        .into_par_iter()
        .map(|params| match cell_accuracy(&params, x, y, &fold_sets, model_seed) {
            Ok(acc) => GridCell { params, mean_accuracy: Some(acc), error: None },
            Err(e) => GridCell { params, mean_accuracy: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, c) in scored.iter().enumerate() {
        if let Some(acc) = c.mean_accuracy {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
    }
    match best {
        Some((i, _)) => Ok(GridSearchResult {
            best: ModelSpec::new(scored[i].params.clone(), model_seed),
            cells: scored,
        }),
        None => Err(ClassifierError::AllCellsInvalid(
            scored[0].error.clone().unwrap_or_default(),
        )),
    }
}
