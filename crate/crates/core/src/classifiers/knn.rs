use std::collections::BTreeMap;

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Majority label among the `k` Euclidean-nearest training rows (equal
/// distances resolved by row order). Vote ties go to the class with the
/// smaller mean neighbour distance, then to the smaller label.
pub fn knn_predict(train: &FeatureMatrix, labels: &[u32], query: &[f64], k: usize) -> Result<u32> {
    let n = train.n_rows();
    if labels.len() != n {
        return Err(QencError::Validation(format!(
            "{n} training rows but {} labels",
            labels.len()
        )));
    }
    if k == 0 || k > n {
        return Err(QencError::Config(format!(
            "knn: k = {k} must lie in 1..={n}"
        )));
    }
    if query.len() != train.n_cols() {
        return Err(QencError::Validation(format!(
            "query has {} features, training set {}",
            query.len(),
            train.n_cols()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, x)| {
            (
                x.iter()
                    .zip(query)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt(),
                i,
            )
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for &(d, i) in &dist[..k] {
        let e = votes.entry(labels[i]).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d;
    }
    let best = votes
        .iter()
        .map(|(&label, &(count, total))| (label, count, total / count as f64))
        .fold(None::<(u32, usize, f64)>, |best, cand| match best {
            None => Some(cand),
            Some(b) => {
                let better = cand.1 > b.1 || (cand.1 == b.1 && cand.2 < b.2);
                Some(if better { cand } else { b })
            }
        })
        .expect("k >= 1 neighbours");
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        FeatureMatrix::from_rows(&rows, None).unwrap()
    }

    #[test]
    fn exact_match_with_k1() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert_eq!(knn_predict(&x, &[4, 7, 9], &[1.0], 1).unwrap(), 7);
    }

    #[test]
    fn k_equals_n_majority() {
        let x = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let labels = [1, 0, 1, 0, 1];
        for q in [-10.0, 0.5, 2.2, 100.0] {
            assert_eq!(knn_predict(&x, &labels, &[q], 5).unwrap(), 1);
        }
    }

    #[test]
    fn three_way_vote_tie_uses_mean_distance() {
        let x = line(&[0.0, 1.0, 3.0]);
        let labels = [2, 1, 0];
        // distance table for q = 0.6: |0.6-0|=0.6, |0.6-1|=0.4, |0.6-3|=2.4
        assert_eq!(knn_predict(&x, &labels, &[0.6], 3).unwrap(), 1);
        // q = 0.4: 0.4, 0.6, 2.6
        assert_eq!(knn_predict(&x, &labels, &[0.4], 3).unwrap(), 2);
        // q = 0.5: equal mean distance for labels 2 and 1, smaller label wins
        assert_eq!(knn_predict(&x, &labels, &[0.5], 3).unwrap(), 1);
    }

    #[test]
    fn k1_training_accuracy_is_perfect_on_distinct_points() {
        let x = line(&[0.3, -1.0, 2.5, 7.0, 4.4]);
        let labels = [0, 1, 1, 0, 1];
        for (i, row) in x.rows().enumerate() {
            assert_eq!(knn_predict(&x, &labels, row, 1).unwrap(), labels[i]);
        }
    }

    #[test]
    fn invalid_k() {
        let x = line(&[0.0, 1.0]);
        assert!(knn_predict(&x, &[0, 1], &[0.0], 0).is_err());
        assert!(knn_predict(&x, &[0, 1], &[0.0], 3).is_err());
    }
}
