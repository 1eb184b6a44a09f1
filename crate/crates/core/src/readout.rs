//! Turns encoded states back into real feature vectors for classical models.
//!
//! Qubit states are read out as per-qubit Pauli expectations (`<Z_i>` by
//! default, optionally `<X_i>` and pairwise `<Z_i Z_j>`); Gaussian states as
//! their quadrature means and variances.

use serde::{Deserialize, Serialize};

use crate::embeddings::{statevector::z_sign, GaussianState, PureState, QuantumState};
use crate::error::{QencError, Result};
use crate::strategies::EncodedDataset;
use crate::types::FeatureMatrix;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitObservables {
    #[serde(default = "yes")]
    pub z: bool,
    #[serde(default)]
    pub x: bool,
    /// `<Z_i Z_j>` for every pair `i < j`.
    #[serde(default)]
    pub zz: bool,
}

impl Default for QubitObservables {
    fn default() -> Self {
        Self {
            z: true,
            x: false,
            zz: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvMoments {
    #[serde(default = "yes")]
    pub mean_x: bool,
    #[serde(default = "yes")]
    pub mean_p: bool,
    #[serde(default = "yes")]
    pub var_x: bool,
    #[serde(default = "yes")]
    pub var_p: bool,
}

impl Default for CvMoments {
    fn default() -> Self {
        Self {
            mean_x: true,
            mean_p: true,
            var_x: true,
            var_p: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    #[serde(default)]
    pub qubit_observables: QubitObservables,
    #[serde(default)]
    pub cv_moments: CvMoments,
}

impl ReadoutSpec {
    pub fn validate(&self) -> Result<()> {
        let q = self.qubit_observables;
        let c = self.cv_moments;
        if !(q.z || q.x || q.zz) {
            return Err(QencError::Config(
                "readout selects no qubit observable".into(),
            ));
        }
        if !(c.mean_x || c.mean_p || c.var_x || c.var_p) {
            return Err(QencError::Config("readout selects no CV moment".into()));
        }
        Ok(())
    }
}

pub fn qubit_expectations(state: &PureState, spec: &ReadoutSpec) -> Vec<f64> {
    let q = state.qubit_count();
    let amps = state.amplitudes();
    let obs = spec.qubit_observables;
    let mut out = Vec::new();
    if obs.z {
        for i in 0..q {
            out.push(
                amps.iter()
                    .enumerate()
                    .map(|(b, a)| a.norm_sqr() * z_sign(b, q, i))
                    .sum(),
            );
        }
    }
    if obs.x {
        for i in 0..q {
            let m = 1 << (q - 1 - i);
            out.push(
                amps.iter()
                    .enumerate()
                    .map(|(b, a)| (a.conj() * amps[b ^ m]).re)
                    .sum(),
            );
        }
    }
    if obs.zz {
        for i in 0..q {
            for j in i + 1..q {
                out.push(
                    amps.iter()
                        .enumerate()
                        .map(|(b, a)| a.norm_sqr() * z_sign(b, q, i) * z_sign(b, q, j))
                        .sum(),
                );
            }
        }
    }
    out
}

/// Per mode, the selected entries of `(<x>, <p>, Var x, Var p)`.
pub fn gaussian_moments(state: &GaussianState, spec: &ReadoutSpec) -> Vec<f64> {
    let m = spec.cv_moments;
    let mean = state.mean();
    let cov = state.covariance();
    let mut out = Vec::new();
    for k in 0..state.mode_count() {
        if m.mean_x {
            out.push(mean[2 * k]);
        }
        if m.mean_p {
            out.push(mean[2 * k + 1]);
        }
        if m.var_x {
            out.push(cov[(2 * k, 2 * k)]);
        }
        if m.var_p {
            out.push(cov[(2 * k + 1, 2 * k + 1)]);
        }
    }
    out
}

pub fn state_features(state: &QuantumState, spec: &ReadoutSpec) -> Vec<f64> {
    match state {
        QuantumState::Qubits(s) => qubit_expectations(s, spec),
        QuantumState::Gaussian(s) => gaussian_moments(s, spec),
    }
}

/// Feature matrix for an encoded dataset. Cell-granular states are read out
/// independently and concatenated along the row; labels carry through.
pub fn dataset_features(encoded: &EncodedDataset, spec: &ReadoutSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let n = encoded.states.n_rows();
    let mut values = Vec::new();
    let mut width = None;
    for i in 0..n {
        let before = values.len();
        for h in encoded.states.row(i) {
            values.extend(state_features(h, spec));
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(prev) if prev != w => {
                return Err(QencError::Validation(format!(
                    "row {i} reads out {w} features, expected {prev}"
                )))
            }
            _ => {}
        }
    }
    let width = width.unwrap_or(0);
    let names = (0..width).map(|j| format!("f{j}")).collect();
    FeatureMatrix::new(values, n, width, encoded.labels.clone(), names)
}

impl EncodedDataset {
    pub fn features(&self, spec: &ReadoutSpec) -> Result<FeatureMatrix> {
        dataset_features(self, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{
        angle_embed, basis_embed, displacement_embed, iqp_embed, squeezing_embed,
    };
    use crate::strategies::{encode_direct, encode_gds, encode_ils};
    use crate::types::{EmbeddingKind, EmbeddingSpec, Granularity};
    use std::f64::consts::PI;

    #[test]
    fn z_expectations() {
        let spec = ReadoutSpec::default();
        assert_eq!(
            qubit_expectations(&basis_embed(&[0.0]).unwrap(), &spec),
            vec![1.0]
        );
        let uniform = iqp_embed(&[0.0, 0.0], 1).unwrap();
        for z in qubit_expectations(&uniform, &spec) {
            assert!(z.abs() < 1e-12);
        }
        let z = qubit_expectations(&angle_embed(&[PI / 3.0]).unwrap(), &spec)[0];
        assert!((z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn x_and_zz_observables() {
        let spec = ReadoutSpec {
            qubit_observables: QubitObservables {
                z: false,
                x: true,
                zz: true,
            },
            ..Default::default()
        };
        // RY(pi/2)|0> = |+>: <X> = 1
        let s = angle_embed(&[PI / 2.0, 0.0]).unwrap();
        let f = qubit_expectations(&s, &spec);
        assert_eq!(f.len(), 3);
        assert!((f[0] - 1.0).abs() < 1e-12);
        assert!(f[1].abs() < 1e-12);
        assert!(f[2].abs() < 1e-12); // <Z0 Z1> = <Z0><Z1> = 0 * 1
    }

    #[test]
    fn cv_moments() {
        let spec = ReadoutSpec::default();
        let vac = displacement_embed(&[0.0]).unwrap();
        assert_eq!(gaussian_moments(&vac, &spec), vec![0.0, 0.0, 1.0, 1.0]);
        let d = displacement_embed(&[1.5]).unwrap();
        assert_eq!(gaussian_moments(&d, &spec), vec![3.0, 0.0, 1.0, 1.0]);
        let s = squeezing_embed(&[0.5]).unwrap();
        let m = gaussian_moments(&s, &spec);
        assert_eq!(&m[..2], &[0.0, 0.0]);
        assert!((m[2] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((m[3] - 1.0f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn empty_selection_rejected() {
        let spec = ReadoutSpec {
            qubit_observables: QubitObservables {
                z: false,
                x: false,
                zz: false,
            },
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn dataset_width_and_sharing() {
        let m = FeatureMatrix::from_rows(
            &[
                vec![0.2, 0.4, 0.6],
                vec![0.2, 0.4, 0.6],
                vec![0.9, 0.1, 0.3],
            ],
            None,
        )
        .unwrap();
        let spec = ReadoutSpec::default();
        let cell = EmbeddingSpec::new(EmbeddingKind::Angle, Granularity::Cell);
        let f = dataset_features(&encode_direct(&m, &cell).unwrap(), &spec).unwrap();
        assert_eq!(f.n_cols(), 3);

        let row = EmbeddingSpec::new(EmbeddingKind::Angle, Granularity::Row);
        let f = dataset_features(&encode_ils(&m, &row).unwrap(), &spec).unwrap();
        assert_eq!(f.row(0), f.row(1));

        let de = dataset_features(&encode_direct(&m, &cell).unwrap(), &spec).unwrap();
        let gds = dataset_features(&encode_gds(&m, &cell).unwrap(), &spec).unwrap();
        for (a, b) in de.values().iter().zip(gds.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
