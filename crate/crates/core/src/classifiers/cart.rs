use serde::{Deserialize, Serialize};

use super::{check_training, ClassifierKind, FitMetadata, ModelParams, TrainedModel};
use crate::error::Result;
use crate::types::FeatureMatrix;

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: u32,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: Vec<usize>,
    classes: Vec<u32>,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Candidate split of a node: `(feature, threshold, weighted child impurity)`.
type Candidate = (usize, f64, f64);

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &i in rows {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        let total = self.counts(rows);
        let n = rows.len();
        let mut best: Option<Candidate> = None;
        for f in 0..self.x.n_cols() {
            let mut sorted: Vec<(f64, usize)> =
                rows.iter().map(|&i| (self.x.get(i, f), i)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left = vec![0; self.classes.len()];
            for p in 1..n {
                left[self.y[sorted[p - 1].1]] += 1;
                let (lo, hi) = (sorted[p - 1].0, sorted[p].0);
                if lo == hi || p < self.min_leaf || n - p < self.min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let score =
                    (p as f64 * gini(&left, p) + (n - p) as f64 * gini(&right, n - p)) / n as f64;
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                if best.is_none_or(|b| score < b.2 - 1e-12) {
                    best = Some((f, threshold, score));
                }
            }
        }
        best
    }

    fn leaf(&self, rows: &[usize]) -> TreeNode {
        let counts = self.counts(rows);
        // max_by_key keeps the last maximum; scan in reverse so the smallest label wins
        let idx = (0..counts.len())
            .rev()
            .max_by_key(|&c| counts[c])
            .unwrap_or(0);
        TreeNode::Leaf {
            label: self.classes[idx],
            samples: rows.len(),
        }
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            label: 0,
            samples: 0,
        });
        let pure = self.counts(rows).iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.max_depth {
            None
        } else {
            self.best_split(rows)
        };
        self.nodes[id] = match split {
            None => self.leaf(rows),
            Some((feature, threshold, _)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| self.x.get(i, feature) <= threshold);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
        };
        id
    }
}

/// Greedy Gini tree. Splits are tried at midpoints between consecutive
/// distinct values; the lowest weighted impurity wins, ties going to the
/// lowest feature and then the lowest threshold. An impure node splits even
/// when no candidate lowers impurity.
pub fn cart_fit(
    features: &FeatureMatrix,
    labels: &[u32],
    max_depth: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<TrainedModel> {
    check_training(features, labels)?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let y = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    let mut b = Builder {
        x: features,
        y,
        classes,
        max_depth,
        min_leaf: min_leaf.max(1),
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..features.n_rows()).collect();
    b.grow(&rows, 0);
    let splits = b
        .nodes
        .iter()
        .filter(|n| matches!(n, TreeNode::Split { .. }))
        .count();
    Ok(TrainedModel {
        kind: ClassifierKind::Cart,
        params: ModelParams::Tree {
            nodes: b.nodes,
            width: features.n_cols(),
        },
        fit: FitMetadata {
            seed,
            iterations: splits,
            converged: true,
        },
    })
}

pub(crate) fn tree_predict(nodes: &[TreeNode], x: &[f64]) -> u32 {
    let mut at = 0;
    loop {
        match &nodes[at] {
            TreeNode::Leaf { label, .. } => return *label,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                at = if x[*feature] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::accuracy;
    use super::*;

    fn nodes(m: &TrainedModel) -> &[TreeNode] {
        match &m.params {
            ModelParams::Tree { nodes, .. } => nodes,
            _ => unreachable!(),
        }
    }

    #[test]
    fn xor_at_depth_two() {
        let x = FeatureMatrix::from_rows(
            &[
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            None,
        )
        .unwrap();
        let y = [0, 1, 1, 0];
        let m = cart_fit(&x, &y, 2, 1, 0).unwrap();
        assert_eq!(accuracy(&m.predict(&x).unwrap().labels, &y).unwrap(), 1.0);
        // zero-gain root: feature 0 wins the tie
        assert_eq!(
            nodes(&m)[0],
            TreeNode::Split {
                feature: 0,
                threshold: 0.5,
                left: 1,
                right: 4
            }
        );
    }

    #[test]
    fn pure_input_is_a_leaf() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![3.0], vec![1.0]], None).unwrap();
        let m = cart_fit(&x, &[1, 1, 1], 6, 1, 0).unwrap();
        assert_eq!(
            nodes(&m),
            &[TreeNode::Leaf {
                label: 1,
                samples: 3
            }]
        );
    }

    /// Enumerates every (feature, midpoint) pair and scores it from scratch.
    fn exhaustive_root(rows: &[Vec<f64>], y: &[u32]) -> (usize, f64) {
        let score = |f: usize, t: f64| {
            let (l, r): (Vec<u32>, Vec<u32>) = (0..rows.len()).map(|i| (rows[i][f], y[i])).fold(
                (vec![], vec![]),
                |(mut l, mut r), (v, c)| {
                    if v <= t {
                        l.push(c)
                    } else {
                        r.push(c)
                    }
                    (l, r)
                },
            );
            let g = |s: &[u32]| {
                if s.is_empty() {
                    return 0.0;
                }
                let p = s.iter().filter(|&&c| c == 1).count() as f64 / s.len() as f64;
                1.0 - p * p - (1.0 - p) * (1.0 - p)
            };
            (l.len() as f64 * g(&l) + r.len() as f64 * g(&r)) / rows.len() as f64
        };
        let mut best = (usize::MAX, f64::NAN, f64::INFINITY);
        for f in 0..rows[0].len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let s = score(f, t);
                if s < best.2 - 1e-12 {
                    best = (f, t, s);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn root_matches_exhaustive_search() {
        let rows = vec![
            vec![2.0, 7.5, 1.0],
            vec![3.5, 1.0, 0.0],
            vec![1.0, 4.0, 1.0],
            vec![6.0, 2.5, 0.0],
            vec![4.5, 9.0, 1.0],
            vec![5.0, 3.0, 0.0],
        ];
        let y = [1, 0, 1, 0, 1, 0];
        let x = FeatureMatrix::from_rows(&rows, None).unwrap();
        let m = cart_fit(&x, &y, 1, 1, 0).unwrap();
        let (f, t) = exhaustive_root(&rows, &y);
        match nodes(&m)[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!((feature, threshold), (f, t));
                // features 1 and 2 both separate the classes; the lower index wins
                assert_eq!(feature, 1);
            }
            _ => panic!("expected a split"),
        }

        let y2 = [1, 1, 0, 0, 1, 0];
        let m = cart_fit(&x, &y2, 1, 1, 0).unwrap();
        let (f, t) = exhaustive_root(&rows, &y2);
        assert!(
            matches!(nodes(&m)[0], TreeNode::Split { feature, threshold, .. } if feature == f && threshold == t)
        );
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x =
            FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], None).unwrap();
        let m = cart_fit(&x, &[0, 1, 1, 1], 6, 2, 0).unwrap();
        // the only admissible threshold is 1.5
        assert!(matches!(nodes(&m)[0], TreeNode::Split { threshold, .. } if threshold == 1.5));
    }
}
