use nalgebra::DMatrix;

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Principal axes fitted on a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// `d x k`, orthonormal columns ordered by decreasing variance.
    pub components: DMatrix<f64>,
    pub column_means: Vec<f64>,
    /// Over all `min(n, d)` singular values; non-increasing, sums to 1.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }
}

/// Singular value decomposition of the centered matrix. Each component is
/// signed so that its largest-magnitude entry is positive.
pub fn pca_fit(matrix: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let r = n.min(d);
    if k == 0 || k > r {
        return Err(QencError::Validation(format!(
            "PCA component count {k} out of range 1..={r}"
        )));
    }
    let mut x = DMatrix::from_row_slice(n, d, matrix.values());
    let column_means: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    for (j, m) in column_means.iter().enumerate() {
        x.column_mut(j).add_scalar_mut(-m);
    }
    let svd = x.try_svd(false, true, f64::EPSILON, 0).ok_or_else(|| {
        QencError::Numerical("PCA singular value decomposition did not converge".into())
    })?;
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return Err(QencError::Numerical(
            "PCA input has zero total variance".into(),
        ));
    }
    let explained_variance_ratio = order.iter().map(|&i| sv[i] * sv[i] / total).collect();

    let mut components = DMatrix::zeros(d, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let row = v_t.row(i);
        let pivot = (0..d).fold(0, |best, j| {
            if row[j].abs() > row[best].abs() {
                j
            } else {
                best
            }
        });
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(j, c)] = sign * row[j];
        }
    }
    Ok(PcaModel {
        components,
        column_means,
        explained_variance_ratio,
    })
}

/// Projects `(x - mean)` onto the components; columns are named `pc0, pc1, ...`.
pub fn pca_transform(model: &PcaModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let d = model.column_means.len();
    if matrix.n_cols() != d {
        return Err(QencError::Validation(format!(
            "PCA fitted on {d} columns, got {}",
            matrix.n_cols()
        )));
    }
    let n = matrix.n_rows();
    let mut x = DMatrix::from_row_slice(n, d, matrix.values());
    for (j, m) in model.column_means.iter().enumerate() {
        x.column_mut(j).add_scalar_mut(-m);
    }
    let y = x * &model.components;
    let k = y.ncols();
    let values = (0..n)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| y[(i, j)])
        .collect();
    let names = (0..k).map(|j| format!("pc{j}")).collect();
    FeatureMatrix::new(values, n, k, matrix.labels().map(<[u32]>::to_vec), names)
}

/// Index of the point on the cumulative explained-variance curve farthest
/// from the chord joining its first and last points, with both axes
/// normalized to `[0, 1]`. Ties resolve to the smallest index.
pub fn detect_elbow(ratios: &[f64]) -> Result<usize> {
    if ratios.len() < 3 {
        return Err(QencError::Validation(format!(
            "elbow detection needs at least 3 ratios, got {}",
            ratios.len()
        )));
    }
    if let Some(v) = ratios.iter().find(|v| !v.is_finite()) {
        return Err(QencError::Validation(format!(
            "non-finite variance ratio {v}"
        )));
    }
    let cumulative: Vec<f64> = ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    let last = cumulative.len() - 1;
    let (first_y, span_y) = (cumulative[0], cumulative[last] - cumulative[0]);
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in cumulative.iter().enumerate() {
        let x = i as f64 / last as f64;
        let y = if span_y > 0.0 {
            (c - first_y) / span_y
        } else {
            0.0
        };
        let dist = (y - x).abs() / std::f64::consts::SQRT_2;
        if dist > best.1 + 1e-12 {
            best = (i, dist);
        }
    }
    Ok(best.0)
}
