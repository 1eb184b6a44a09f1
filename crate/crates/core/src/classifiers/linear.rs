//! Linear models trained by full-batch descent on z-scored features.

use super::{check_binary, check_training, ClassifierKind, FitMetadata, ModelParams, TrainedModel};
use crate::error::Result;
use crate::types::FeatureMatrix;

/// Per-column mean and spread fitted on the training set; zero-spread
/// columns are only centred.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &FeatureMatrix) -> Self {
        let n = features.n_rows() as f64;
        let mut means = Vec::with_capacity(features.n_cols());
        let mut scales = Vec::with_capacity(features.n_cols());
        for j in 0..features.n_cols() {
            let c = features.column(j);
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { means, scales }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub(crate) fn score(weights: &[f64], bias: f64, standardizer: &Standardizer, x: &[f64]) -> f64 {
    standardizer
        .apply(x)
        .iter()
        .zip(weights)
        .map(|(a, w)| a * w)
        .sum::<f64>()
        + bias
}

pub(crate) fn probability(score: f64) -> f64 {
    (1.0 / (1.0 + (-score).exp())).clamp(1e-15, 1.0 - 1e-15)
}

fn standardized_rows(features: &FeatureMatrix, st: &Standardizer) -> Vec<Vec<f64>> {
    features.rows().map(|x| st.apply(x)).collect()
}

/// `log(1 + e^s) - y s`, evaluated without overflow.
fn log_loss(s: f64, y: f64) -> f64 {
    let softplus = if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    };
    softplus - y * s
}

fn logreg_objective(rows: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = rows.len() as f64;
    let data: f64 = rows
        .iter()
        .zip(y)
        .map(|(x, &t)| log_loss(x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b, t))
        .sum::<f64>()
        / n;
    data + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Mean log-loss plus `l2/2 ||w||^2` (bias unregularized). A step that
/// would raise the objective is retried at half the rate.
pub fn logreg_fit(
    features: &FeatureMatrix,
    labels: &[u32],
    lr: f64,
    epochs: usize,
    l2: f64,
    seed: u64,
) -> Result<TrainedModel> {
    check_training(features, labels)?;
    check_binary(labels)?;
    let st = Standardizer::fit(features);
    let rows = standardized_rows(features, &st);
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let d = features.n_cols();
    let n = rows.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut rate = lr;
    let mut loss = logreg_objective(&rows, &y, &w, b, l2);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..epochs {
        iterations += 1;
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (x, &t) in rows.iter().zip(&y) {
            let s = x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            let r = 1.0 / (1.0 + (-s).exp()) - t;
            for (g, a) in gw.iter_mut().zip(x) {
                *g += r * a;
            }
            gb += r;
        }
        for (g, wj) in gw.iter_mut().zip(&w) {
            *g = *g / n + l2 * wj;
        }
        gb /= n;
        let grad_norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if grad_norm < 1e-10 {
            converged = true;
            break;
        }
        loop {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - rate * g).collect();
            let b_new = b - rate * gb;
            let new_loss = logreg_objective(&rows, &y, &w_new, b_new, l2);
            if new_loss <= loss + 1e-12 || rate < 1e-12 {
                w = w_new;
                b = b_new;
                loss = new_loss;
                break;
            }
            rate /= 2.0;
        }
    }
    Ok(TrainedModel {
        kind: ClassifierKind::Logreg,
        params: ModelParams::Linear {
            weights: w,
            bias: b,
            standardizer: st,
        },
        fit: FitMetadata {
            seed,
            iterations,
            converged,
        },
    })
}

/// Full-batch Pegasos: step `1/(lambda t)` on the averaged hinge
/// sub-gradient, with the bias folded in as a constant feature. Label 1 maps
/// to `+1`, label 0 to `-1`; a zero score predicts label 1.
pub fn linear_svm_fit(
    features: &FeatureMatrix,
    labels: &[u32],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<TrainedModel> {
    check_training(features, labels)?;
    check_binary(labels)?;
    let st = Standardizer::fit(features);
    let rows: Vec<Vec<f64>> = standardized_rows(features, &st)
        .into_iter()
        .map(|mut x| {
            x.push(1.0);
            x
        })
        .collect();
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let mut w = vec![0.0; dim];
    let radius = 1.0 / lambda.sqrt();
    let mut converged = true;
    for t in 1..=epochs {
        let eta = 1.0 / (lambda * t as f64);
        let mut g = vec![0.0; dim];
        let mut violators = 0;
        for (x, &t) in rows.iter().zip(&y) {
            let margin = t * x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            if margin < 1.0 {
                violators += 1;
                for (gj, a) in g.iter_mut().zip(x) {
                    *gj += t * a;
                }
            }
        }
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj = (1.0 - eta * lambda) * *wj + eta * gj / n;
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            for wj in &mut w {
                *wj *= radius / norm;
            }
        }
        converged = violators == 0;
    }
    let bias = w.pop().expect("bias slot");
    Ok(TrainedModel {
        kind: ClassifierKind::LinearSvm,
        params: ModelParams::Linear {
            weights: w,
            bias,
            standardizer: st,
        },
        fit: FitMetadata {
            seed,
            iterations: epochs,
            converged,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::blobs;
    use super::super::{accuracy, ClassifierSpec};
    use super::*;

    fn train_acc(model: &TrainedModel, x: &FeatureMatrix, y: &[u32]) -> f64 {
        accuracy(&model.predict(x).unwrap().labels, y).unwrap()
    }

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(400, 2, 3.0, 1);
        let lr = logreg_fit(&x, &y, 0.1, 500, 1e-4, 0).unwrap();
        assert!(train_acc(&lr, &x, &y) >= 0.99);
        let svm = linear_svm_fit(&x, &y, 1e-3, 500, 0).unwrap();
        assert!(train_acc(&svm, &x, &y) >= 0.99);
    }

    #[test]
    fn zero_weights_give_half_probability_and_positive_class() {
        let (x, _) = blobs(10, 3, 1.0, 2);
        let zero = |kind| TrainedModel {
            kind,
            params: ModelParams::Linear {
                weights: vec![0.0; 3],
                bias: 0.0,
                standardizer: Standardizer::fit(&x),
            },
            fit: FitMetadata {
                seed: 0,
                iterations: 0,
                converged: false,
            },
        };
        let p = zero(ClassifierKind::Logreg).predict(&x).unwrap();
        assert!(p.probabilities.unwrap().iter().all(|&v| v == 0.5));
        let p = zero(ClassifierKind::LinearSvm).predict(&x).unwrap();
        assert!(p.labels.iter().all(|&l| l == 1));
        assert!(p.probabilities.is_none());
    }

    #[test]
    fn loss_never_increases() {
        let (x, y) = blobs(100, 3, 0.5, 3);
        let st = Standardizer::fit(&x);
        let rows = standardized_rows(&x, &st);
        let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let mut prev = f64::INFINITY;
        for epochs in [1, 2, 5, 10, 50, 100] {
            let m = logreg_fit(&x, &y, 5.0, epochs, 1e-4, 0).unwrap();
            let ModelParams::Linear { weights, bias, .. } = &m.params else {
                unreachable!()
            };
            let loss = logreg_objective(&rows, &yf, weights, *bias, 1e-4);
            assert!(loss <= prev + 1e-9);
            prev = loss;
        }
    }

    #[test]
    fn duplicated_rows_keep_boundary() {
        let (x, y) = blobs(80, 2, 0.7, 4);
        let idx: Vec<usize> = (0..80).chain(0..80).collect();
        let x2 = x.select_rows(&idx);
        let y2: Vec<u32> = idx.iter().map(|&i| y[i]).collect();
        let a = logreg_fit(&x, &y, 0.1, 500, 1e-4, 0).unwrap();
        let b = logreg_fit(&x2, &y2, 0.1, 500, 1e-4, 0).unwrap();
        let (
            ModelParams::Linear {
                weights: wa,
                bias: ba,
                ..
            },
            ModelParams::Linear {
                weights: wb,
                bias: bb,
                ..
            },
        ) = (&a.params, &b.params)
        else {
            unreachable!()
        };
        for (p, q) in wa.iter().zip(wb) {
            assert!((p - q).abs() < 1e-6);
        }
        assert!((ba - bb).abs() < 1e-6);
    }

    #[test]
    fn svm_scale_invariance() {
        let (x, y) = blobs(200, 3, 1.5, 5);
        let x2 = x.map_values(|_, _, v| 2.0 * v).unwrap();
        let spec = ClassifierSpec::default_for(ClassifierKind::LinearSvm);
        let a = spec.fit(&x, &y, 0).unwrap().predict(&x).unwrap().labels;
        let b = spec.fit(&x2, &y, 0).unwrap().predict(&x2).unwrap().labels;
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = blobs(10, 2, 1.0, 6);
        assert!(logreg_fit(&x, &[1; 10], 0.1, 10, 0.0, 0).is_err());
        assert!(linear_svm_fit(&x, &[0; 10], 1e-3, 10, 0).is_err());
        assert!(logreg_fit(&x, &[2; 10], 0.1, 10, 0.0, 0).is_err());
    }
}
