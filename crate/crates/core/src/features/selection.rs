use super::{FeatureError, FeatureMatrix, Label};
use crate::scalar::Real;

/// One-way ANOVA F per column and the resulting ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    /// F statistic per column; `+inf` when classes separate with zero spread.
    pub scores: Vec<T>,
    /// Column indices by descending score, ties by column order.
    pub ranking: Vec<usize>,
}

impl<T: Real> SelectionResult<T> {
    /// The `k` best columns, returned in ascending column order.
    pub fn select_top_k(&self, k: usize) -> Vec<usize> {
        let mut chosen: Vec<usize> = self.ranking.iter().take(k).copied().collect();
        chosen.sort_unstable();
        chosen
    }
}

pub fn anova_f_scores<T: Real>(m: &FeatureMatrix<T>) -> Result<SelectionResult<T>, FeatureError> {
    for label in Label::BOTH {
        let n = m.class_count(label);
        if n < 2 {
            return Err(FeatureError::ClassTooSmall(label, format!("{n} rows, ANOVA needs 2")));
        }
    }
    let n = m.n_rows();
    let groups = Label::BOTH.len();
    let scores: Vec<T> = (0..m.n_cols())
        .map(|j| {
            let col = m.column(j);
            let (lo, hi) = col
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
            if lo == hi {
                return T::zero();
            }
            let grand = col.iter().copied().sum::<T>() / T::of_usize(n);
            let mut between = T::zero();
            let mut within = T::zero();
            for label in Label::BOTH {
                let vals: Vec<T> = col
                    .iter()
                    .zip(m.labels())
                    .filter(|(_, &l)| l == label)
                    .map(|(&v, _)| v)
                    .collect();
                let g_mean = vals.iter().copied().sum::<T>() / T::of_usize(vals.len());
                between = between + T::of_usize(vals.len()) * (g_mean - grand).powi(2);
                within = within + vals.iter().map(|&v| (v - g_mean).powi(2)).sum::<T>();
            }
            let ms_between = between / T::of_usize(groups - 1);
            let ms_within = within / T::of_usize(n - groups);
            if ms_within > T::zero() {
                ms_between / ms_within
            } else if ms_between > T::zero() {
                T::infinity()
            } else {
                T::zero()
            }
        })
        .collect();

    let mut ranking: Vec<usize> = (0..scores.len()).collect();
    ranking.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("F scores are never NaN")
            .then(a.cmp(&b))
    });
    Ok(SelectionResult { scores, ranking })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_group(a: &[f64], b: &[f64]) -> FeatureMatrix<f64> {
        let rows = a.iter().chain(b).map(|&v| vec![v]).collect();
        let labels = a
            .iter()
            .map(|_| Label::Healthy)
            .chain(b.iter().map(|_| Label::Parkinson))
            .collect();
        FeatureMatrix::from_rows(vec!["x".into()], rows, labels).unwrap()
    }

    #[test]
    fn hand_anova() {
        let r = anova_f_scores(&two_group(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0])).unwrap();
        assert!((r.scores[0] - 13.5).abs() < 1e-12);
    }

    #[test]
    fn identical_groups_score_zero() {
        let r = anova_f_scores(&two_group(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])).unwrap();
        assert_eq!(r.scores[0], 0.0);
    }

    #[test]
    fn zero_within_variance_is_infinite_and_first() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 3.0], vec![1.0, 5.0]];
        let labels = vec![Label::Healthy, Label::Healthy, Label::Parkinson, Label::Parkinson];
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap();
        let r = anova_f_scores(&m).unwrap();
        assert!(r.scores[0].is_infinite());
        assert_eq!(r.ranking, vec![0, 1]);
    }

    #[test]
    fn ties_follow_column_order() {
        let rows = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.5], vec![5.0, 5.0, 0.2], vec![6.0, 6.0, 0.1]];
        let labels = vec![Label::Healthy, Label::Healthy, Label::Parkinson, Label::Parkinson];
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows, labels).unwrap();
        let r = anova_f_scores(&m).unwrap();
        assert_eq!(r.ranking, vec![0, 1, 2]);
        assert_eq!(r.select_top_k(2), vec![0, 1]);
    }

    #[test]
    fn needs_two_rows_per_class() {
        assert!(anova_f_scores(&two_group(&[1.0], &[2.0, 3.0])).is_err());
    }
}
