//! Gaussian continuous-variable states in the hbar = 2 convention: the
//! vacuum has zero mean and identity covariance, and a coherent state with
//! real amplitude `alpha` has `<x> = 2 alpha`.

use nalgebra::DMatrix;

use crate::error::{QencError, Result};

/// Quadrature means `(x_0, p_0, x_1, p_1, ...)` and the `2M x 2M` covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: vec![0.0; 2 * modes],
            covariance: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn determinant(&self) -> f64 {
        self.covariance.determinant()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.covariance.nrows();
        (0..n).all(|i| {
            (0..i).all(|j| (self.covariance[(i, j)] - self.covariance[(j, i)]).abs() <= tol)
        })
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(QencError::Validation("embedding input is empty".into()));
    }
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(QencError::Validation(format!(
            "non-finite embedding input {v}"
        ))),
        None => Ok(()),
    }
}

/// One coherent state per entry, `D(alpha)|0>` with real `alpha = x_j`.
pub fn displacement_embed(x: &[f64]) -> Result<GaussianState> {
    check_finite(x)?;
    let mut state = GaussianState::vacuum(x.len());
    for (j, &alpha) in x.iter().enumerate() {
        state.mean[2 * j] = 2.0 * alpha;
    }
    Ok(state)
}

/// One squeezed vacuum per entry, `S(r)|0>`: `Var(x) = e^{-2r}`, `Var(p) = e^{2r}`.
pub fn squeezing_embed(r: &[f64]) -> Result<GaussianState> {
    check_finite(r)?;
    let mut state = GaussianState::vacuum(r.len());
    for (j, &rj) in r.iter().enumerate() {
        state.covariance[(2 * j, 2 * j)] = (-2.0 * rj).exp();
        state.covariance[(2 * j + 1, 2 * j + 1)] = (2.0 * rj).exp();
    }
    Ok(state)
}

/// Product state of independent modes: concatenated means, block-diagonal covariance.
pub fn gaussian_join(states: &[&GaussianState]) -> Result<GaussianState> {
    if states.is_empty() {
        return Err(QencError::Validation(
            "cannot join an empty list of states".into(),
        ));
    }
    let dim: usize = states.iter().map(|s| s.mean.len()).sum();
    let mut mean = Vec::with_capacity(dim);
    let mut covariance = DMatrix::zeros(dim, dim);
    let mut offset = 0;
    for s in states {
        mean.extend_from_slice(&s.mean);
        let k = s.mean.len();
        covariance
            .view_mut((offset, offset), (k, k))
            .copy_from(&s.covariance);
        offset += k;
    }
    Ok(GaussianState { mean, covariance })
}
