use serde::{Deserialize, Serialize};

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Per-column bounds fitted on training data, mapping onto `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub bounds: Vec<(f64, f64)>,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxScaler {
    pub fn fit(matrix: &FeatureMatrix, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(QencError::Config(format!(
                "invalid scaling interval [{lo}, {hi}]"
            )));
        }
        if matrix.n_rows() == 0 {
            return Err(QencError::Validation(
                "cannot fit scaling on an empty matrix".into(),
            ));
        }
        let bounds = (0..matrix.n_cols())
            .map(|j| {
                matrix
                    .column(j)
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    })
            })
            .collect();
        Ok(Self { bounds, lo, hi })
    }

    fn check_width(&self, matrix: &FeatureMatrix) -> Result<()> {
        if matrix.n_cols() != self.bounds.len() {
            return Err(QencError::Validation(format!(
                "scaler fitted on {} columns, got {}",
                self.bounds.len(),
                matrix.n_cols()
            )));
        }
        Ok(())
    }

    /// Values outside the fitted bounds are clamped to the interval.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_width(matrix)?;
        let (lo, hi) = (self.lo, self.hi);
        matrix.map_values(|_, j, v| {
            let (min, max) = self.bounds[j];
            if max == min {
                (lo + hi) / 2.0
            } else {
                let t = ((v - min) / (max - min)).clamp(0.0, 1.0);
                lo + t * (hi - lo)
            }
        })
    }

    /// Maps scaled values back; constant columns return their fitted value.
    pub fn inverse_transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_width(matrix)?;
        matrix.map_values(|_, j, v| {
            let (min, max) = self.bounds[j];
            min + (v - self.lo) / (self.hi - self.lo) * (max - min)
        })
    }
}

pub fn min_max_scale(
    matrix: &FeatureMatrix,
    interval: (f64, f64),
) -> Result<(FeatureMatrix, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(matrix, interval)?;
    Ok((scaler.transform(matrix)?, scaler))
}

/// Per-column thresholds turning real features into bits for basis encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binarizer {
    pub thresholds: Vec<f64>,
}

impl Binarizer {
    /// Thresholds at each column's median (mean of the middle pair for even counts).
    pub fn fit_median(matrix: &FeatureMatrix) -> Result<Self> {
        if matrix.n_rows() == 0 {
            return Err(QencError::Validation(
                "cannot fit thresholds on an empty matrix".into(),
            ));
        }
        let thresholds = (0..matrix.n_cols())
            .map(|j| {
                let mut c = matrix.column(j);
                c.sort_by(f64::total_cmp);
                let n = c.len();
                if n % 2 == 1 {
                    c[n / 2]
                } else {
                    (c[n / 2 - 1] + c[n / 2]) / 2.0
                }
            })
            .collect();
        Ok(Self { thresholds })
    }

    /// `1` where the value exceeds the column threshold, else `0`.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.n_cols() != self.thresholds.len() {
            return Err(QencError::Validation(format!(
                "binarizer fitted on {} columns, got {}",
                self.thresholds.len(),
                matrix.n_cols()
            )));
        }
        matrix.map_values(|_, j, v| f64::from(u8::from(v > self.thresholds[j])))
    }
}
