//! Small deterministic classifiers that consume readout features.

mod cart;
mod knn;
mod linear;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

pub use cart::{cart_fit, TreeNode};
pub use knn::knn_predict;
pub use linear::{linear_svm_fit, logreg_fit, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logreg,
    Knn,
    LinearSvm,
    Cart,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::Knn => "knn",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::Cart => "cart",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A classifier together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Logreg {
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_l2")]
        l2: f64,
    },
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    LinearSvm {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
    },
    Cart {
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    500
}
fn default_l2() -> f64 {
    1e-4
}
fn default_k() -> usize {
    5
}
fn default_lambda() -> f64 {
    1e-3
}
fn default_depth() -> usize {
    6
}
fn default_min_leaf() -> usize {
    5
}

impl ClassifierSpec {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Logreg => ClassifierSpec::Logreg {
                lr: default_lr(),
                epochs: default_epochs(),
                l2: default_l2(),
            },
            ClassifierKind::Knn => ClassifierSpec::Knn { k: default_k() },
            ClassifierKind::LinearSvm => ClassifierSpec::LinearSvm {
                lambda: default_lambda(),
                epochs: default_epochs(),
            },
            ClassifierKind::Cart => ClassifierSpec::Cart {
                max_depth: default_depth(),
                min_leaf: default_min_leaf(),
            },
        }
    }

    /// The four classifiers with default hyperparameters.
    pub fn defaults() -> Vec<Self> {
        [
            ClassifierKind::Logreg,
            ClassifierKind::Knn,
            ClassifierKind::LinearSvm,
            ClassifierKind::Cart,
        ]
        .into_iter()
        .map(Self::default_for)
        .collect()
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::Logreg { .. } => ClassifierKind::Logreg,
            ClassifierSpec::Knn { .. } => ClassifierKind::Knn,
            ClassifierSpec::LinearSvm { .. } => ClassifierKind::LinearSvm,
            ClassifierSpec::Cart { .. } => ClassifierKind::Cart,
        }
    }

    /// Hyperparameters as `name=value` pairs joined by spaces.
    pub fn describe(&self) -> String {
        match *self {
            ClassifierSpec::Logreg { lr, epochs, l2 } => format!("lr={lr} epochs={epochs} l2={l2}"),
            ClassifierSpec::Knn { k } => format!("k={k}"),
            ClassifierSpec::LinearSvm { lambda, epochs } => {
                format!("lambda={lambda} epochs={epochs}")
            }
            ClassifierSpec::Cart {
                max_depth,
                min_leaf,
            } => format!("max_depth={max_depth} min_leaf={min_leaf}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(QencError::Config(format!("{}: {what}", self.kind())));
        match *self {
            ClassifierSpec::Logreg { lr, epochs, l2 } => {
                if !(lr > 0.0 && lr.is_finite()) {
                    return bad("lr must be positive");
                }
                if epochs == 0 {
                    return bad("epochs must be positive");
                }
                if !(l2 >= 0.0 && l2.is_finite()) {
                    return bad("l2 must be non-negative");
                }
            }
            ClassifierSpec::Knn { k } => {
                if k == 0 {
                    return bad("k must be at least 1");
                }
            }
            ClassifierSpec::LinearSvm { lambda, epochs } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return bad("lambda must be positive");
                }
                if epochs == 0 {
                    return bad("epochs must be positive");
                }
            }
            ClassifierSpec::Cart {
                max_depth,
                min_leaf,
            } => {
                if max_depth == 0 || min_leaf == 0 {
                    return bad("max_depth and min_leaf must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn fit(&self, features: &FeatureMatrix, labels: &[u32], seed: u64) -> Result<TrainedModel> {
        self.validate()?;
        match *self {
            ClassifierSpec::Logreg { lr, epochs, l2 } => {
                logreg_fit(features, labels, lr, epochs, l2, seed)
            }
            ClassifierSpec::Knn { k } => knn_fit(features, labels, k, seed),
            ClassifierSpec::LinearSvm { lambda, epochs } => {
                linear_svm_fit(features, labels, lambda, epochs, seed)
            }
            ClassifierSpec::Cart {
                max_depth,
                min_leaf,
            } => cart_fit(features, labels, max_depth, min_leaf, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    /// Weights act on standardized features.
    Linear {
        weights: Vec<f64>,
        bias: f64,
        standardizer: Standardizer,
    },
    Knn {
        features: FeatureMatrix,
        labels: Vec<u32>,
        k: usize,
    },
    Tree {
        nodes: Vec<TreeNode>,
        width: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub params: ModelParams,
    pub fit: FitMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u32>,
    /// Positive-class probabilities (logistic regression only).
    pub probabilities: Option<Vec<f64>>,
}

impl TrainedModel {
    pub fn input_width(&self) -> usize {
        match &self.params {
            ModelParams::Linear { weights, .. } => weights.len(),
            ModelParams::Knn { features, .. } => features.n_cols(),
            ModelParams::Tree { width, .. } => *width,
        }
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Prediction> {
        let width = self.input_width();
        if features.n_cols() != width {
            return Err(QencError::Validation(format!(
                "{} model expects {width} features, got {}",
                self.kind,
                features.n_cols()
            )));
        }
        match &self.params {
            ModelParams::Linear {
                weights,
                bias,
                standardizer,
            } => {
                let scores: Vec<f64> = features
                    .rows()
                    .map(|x| linear::score(weights, *bias, standardizer, x))
                    .collect();
                let labels = scores.iter().map(|&s| u32::from(s >= 0.0)).collect();
                let probabilities = (self.kind == ClassifierKind::Logreg)
                    .then(|| scores.iter().map(|&s| linear::probability(s)).collect());
                Ok(Prediction {
                    labels,
                    probabilities,
                })
            }
            ModelParams::Knn {
                features: train,
                labels,
                k,
            } => {
                let labels = features
                    .rows()
                    .map(|q| knn_predict(train, labels, q, *k))
                    .collect::<Result<_>>()?;
                Ok(Prediction {
                    labels,
                    probabilities: None,
                })
            }
            ModelParams::Tree { nodes, .. } => Ok(Prediction {
                labels: features
                    .rows()
                    .map(|x| cart::tree_predict(nodes, x))
                    .collect(),
                probabilities: None,
            }),
        }
    }
}

/// Stores the training set; prediction does the work.
pub fn knn_fit(
    features: &FeatureMatrix,
    labels: &[u32],
    k: usize,
    seed: u64,
) -> Result<TrainedModel> {
    check_training(features, labels)?;
    if k == 0 || k > features.n_rows() {
        return Err(QencError::Config(format!(
            "knn: k = {k} must lie in 1..={}",
            features.n_rows()
        )));
    }
    Ok(TrainedModel {
        kind: ClassifierKind::Knn,
        params: ModelParams::Knn {
            features: features.clone().with_labels(None)?,
            labels: labels.to_vec(),
            k,
        },
        fit: FitMetadata {
            seed,
            iterations: 0,
            converged: true,
        },
    })
}

pub(crate) fn check_training(features: &FeatureMatrix, labels: &[u32]) -> Result<()> {
    if features.n_rows() != labels.len() {
        return Err(QencError::Validation(format!(
            "{} feature rows but {} labels",
            features.n_rows(),
            labels.len()
        )));
    }
    if features.n_rows() == 0 {
        return Err(QencError::Validation("empty training set".into()));
    }
    Ok(())
}

/// Requires labels drawn from `{0, 1}` with both classes present.
pub(crate) fn check_binary(labels: &[u32]) -> Result<()> {
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(QencError::Validation(format!(
            "binary classifier got label {l}"
        )));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(QencError::Validation(
            "training data contains a single class".into(),
        ));
    }
    Ok(())
}

pub fn accuracy(predictions: &[u32], labels: &[u32]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(QencError::Validation(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(QencError::Validation("accuracy of an empty set".into()));
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Seeded split stratified by class: each class contributes
/// `round(fraction * count)` rows to the training part. Both parts keep the
/// original row order. Unlabelled matrices are split without stratification.
pub fn train_test_split(
    matrix: &FeatureMatrix,
    fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(QencError::Config(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = matrix.n_rows();
    let groups: Vec<Vec<usize>> = match matrix.labels() {
        Some(labels) => {
            let mut classes: Vec<u32> = labels.to_vec();
            classes.sort_unstable();
            classes.dedup();
            classes
                .iter()
                .map(|&c| (0..n).filter(|&i| labels[i] == c).collect())
                .collect()
        }
        None => vec![(0..n).collect()],
    };
    let mut in_train = vec![false; n];
    for mut members in groups {
        let take = (fraction * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let train: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    if train.is_empty() || test.is_empty() {
        return Err(QencError::Validation(format!(
            "split of {n} rows at {fraction} leaves a part empty"
        )));
    }
    Ok((matrix.select_rows(&train), matrix.select_rows(&test)))
}
