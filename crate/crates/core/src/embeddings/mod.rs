//! Simulated quantum embeddings.
//!
//! Qubit embeddings (basis, angle, IQP, QAOA) run on a dense statevector;
//! continuous-variable embeddings (displacement, squeezing) are tracked by
//! their first and second moments.

pub mod gaussian;
pub mod statevector;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QencError, Result};
use crate::types::{EmbeddingKind, EmbeddingSpec, Granularity};

pub use gaussian::{displacement_embed, gaussian_join, squeezing_embed, GaussianState};

/// Largest register the statevector simulator will allocate.
pub const MAX_QUBITS: usize = 20;

/// Normalized amplitude vector over `qubit_count` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    qubit_count: usize,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QencError::Validation(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QencError::Validation(format!(
                "state is not normalized (norm^2 = {norm})"
            )));
        }
        Ok(Self {
            qubit_count: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Output of any embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Qubits(PureState),
    Gaussian(GaussianState),
}

impl QuantumState {
    pub fn as_qubits(&self) -> Option<&PureState> {
        match self {
            QuantumState::Qubits(s) => Some(s),
            QuantumState::Gaussian(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianState> {
        match self {
            QuantumState::Gaussian(s) => Some(s),
            QuantumState::Qubits(_) => None,
        }
    }
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(QencError::Validation("embedding input is empty".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(QencError::Validation(format!(
            "non-finite embedding input {v}"
        )));
    }
    Ok(())
}

fn check_register(qubits: usize) -> Result<()> {
    if qubits > MAX_QUBITS {
        return Err(QencError::Config(format!(
            "{qubits} qubits exceeds the statevector limit of {MAX_QUBITS}; \
             use cell granularity or fewer components"
        )));
    }
    Ok(())
}

fn finish(amplitudes: Vec<Complex64>, qubit_count: usize) -> PureState {
    PureState {
        amplitudes,
        qubit_count,
    }
}

/// Computational basis state `|b_0 b_1 ... b_{d-1}>`, first bit most significant.
pub fn basis_embed(bits: &[f64]) -> Result<PureState> {
    check_input(bits)?;
    check_register(bits.len())?;
    let mut index = 0usize;
    for (j, &b) in bits.iter().enumerate() {
        let bit = if b == 0.0 {
            0
        } else if b == 1.0 {
            1
        } else {
            return Err(QencError::Validation(format!(
                "basis embedding needs binary input, got {b} at position {j}; binarize first"
            )));
        };
        index = (index << 1) | bit;
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << bits.len()];
    amps[index] = Complex64::new(1.0, 0.0);
    Ok(finish(amps, bits.len()))
}

/// Product state `RY(x_0)|0> (x) RY(x_1)|0> (x) ...`.
pub fn angle_embed(x: &[f64]) -> Result<PureState> {
    check_input(x)?;
    let q = x.len();
    check_register(q)?;
    let mut amps = statevector::zero_state(q);
    for (j, &xj) in x.iter().enumerate() {
        statevector::apply_single(&mut amps, q, j, &statevector::ry(xj));
    }
    Ok(finish(amps, q))
}

/// IQP feature map: per layer, Hadamards on all qubits followed by the
/// diagonal `exp(i (sum_j x_j Z_j + sum_{j<k} x_j x_k Z_j Z_k))`.
pub fn iqp_embed(x: &[f64], layers: usize) -> Result<PureState> {
    check_input(x)?;
    if layers == 0 {
        return Err(QencError::Config("IQP needs at least one layer".into()));
    }
    let q = x.len();
    check_register(q)?;
    let mut amps = statevector::zero_state(q);
    let h = statevector::hadamard();
    for _ in 0..layers {
        for j in 0..q {
            statevector::apply_single(&mut amps, q, j, &h);
        }
        statevector::apply_phase(&mut amps, |b| {
            let z: Vec<f64> = (0..q).map(|j| statevector::z_sign(b, q, j)).collect();
            let mut phase = 0.0;
            for j in 0..q {
                phase += x[j] * z[j];
                for k in j + 1..q {
                    phase += x[j] * x[k] * z[j] * z[k];
                }
            }
            phase
        });
    }
    Ok(finish(amps, q))
}

/// Wires used by the QAOA map: the entangling ring needs at least two.
pub fn qaoa_wires(features: usize) -> usize {
    features.max(2)
}

pub fn qaoa_param_count(features: usize, layers: usize) -> usize {
    2 * layers * qaoa_wires(features)
}

/// Deterministic angles in `[0, 2 pi)` for a seeded, untrained QAOA map.
pub fn seeded_qaoa_params(seed: u64, features: usize, layers: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..qaoa_param_count(features, layers))
        .map(|_| rng.random::<f64>() * TAU)
        .collect()
}

/// QAOA-style feature map over `w = max(d, 2)` wires (features zero-padded).
///
/// Each layer applies `RX(x_j)` on every wire, then the ring of
/// `ZZ(theta) = exp(-i theta/2 Z_j Z_{j+1 mod w})` entanglers (for two wires
/// the ring visits the same pair twice), then `RY(phi_j)` on every wire.
/// Per-layer parameters are laid out as `[theta_0..theta_{w-1}, phi_0..phi_{w-1}]`.
pub fn qaoa_embed(x: &[f64], params: &[f64], layers: usize) -> Result<PureState> {
    check_input(x)?;
    if layers == 0 {
        return Err(QencError::Config("QAOA needs at least one layer".into()));
    }
    let w = qaoa_wires(x.len());
    check_register(w)?;
    let expected = qaoa_param_count(x.len(), layers);
    if params.len() != expected {
        return Err(QencError::Config(format!(
            "QAOA with {} features and {layers} layers needs {expected} parameters, got {}",
            x.len(),
            params.len()
        )));
    }
    let mut padded = x.to_vec();
    padded.resize(w, 0.0);

    let mut amps = statevector::zero_state(w);
    for layer in params.chunks_exact(2 * w) {
        let (zz, mix) = layer.split_at(w);
        for (j, &xj) in padded.iter().enumerate() {
            statevector::apply_single(&mut amps, w, j, &statevector::rx(xj));
        }
        statevector::apply_phase(&mut amps, |b| {
            (0..w)
                .map(|j| {
                    let k = (j + 1) % w;
                    -0.5 * zz[j] * statevector::z_sign(b, w, j) * statevector::z_sign(b, w, k)
                })
                .sum()
        });
        for (j, &phi) in mix.iter().enumerate() {
            statevector::apply_single(&mut amps, w, j, &statevector::ry(phi));
        }
    }
    Ok(finish(amps, w))
}

/// Kronecker product of the states in list order.
pub fn tensor_join(states: &[&PureState]) -> Result<PureState> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| QencError::Validation("cannot join an empty list of states".into()))?;
    let mut amps = first.amplitudes.clone();
    let mut qubits = first.qubit_count;
    for s in rest {
        qubits += s.qubit_count;
        check_register(qubits)?;
        amps = amps
            .iter()
            .flat_map(|a| s.amplitudes.iter().map(move |b| a * b))
            .collect();
    }
    Ok(finish(amps, qubits))
}

/// An embedding bound to a fixed input width, with any seeded parameters
/// resolved once up front.
#[derive(Debug, Clone)]
pub struct Embedder {
    spec: EmbeddingSpec,
    width: usize,
    qaoa_params: Vec<f64>,
}

impl Embedder {
    /// `features` is the matrix width; cell granularity embeds one value at a time.
    pub fn new(spec: &EmbeddingSpec, features: usize) -> Result<Self> {
        spec.validate()?;
        let width = match spec.granularity {
            Granularity::Cell => 1,
            Granularity::Row => features,
        };
        let qubits = match spec.kind {
            EmbeddingKind::Qaoa => qaoa_wires(width),
            EmbeddingKind::Displacement | EmbeddingKind::Squeezing => 0,
            _ => width,
        };
        check_register(qubits)?;
        let qaoa_params = if spec.kind == EmbeddingKind::Qaoa {
            if spec.qaoa_params.is_empty() {
                seeded_qaoa_params(spec.rng_seed, width, spec.layers)
            } else {
                let expected = qaoa_param_count(width, spec.layers);
                if spec.qaoa_params.len() != expected {
                    return Err(QencError::Config(format!(
                        "QAOA with input width {width} and {} layers needs {expected} parameters, got {}",
                        spec.layers,
                        spec.qaoa_params.len()
                    )));
                }
                spec.qaoa_params.clone()
            }
        } else {
            Vec::new()
        };
        Ok(Self {
            spec: spec.clone(),
            width,
            qaoa_params,
        })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn qaoa_params(&self) -> &[f64] {
        &self.qaoa_params
    }

    pub fn embed(&self, x: &[f64]) -> Result<QuantumState> {
        if x.len() != self.width {
            return Err(QencError::Validation(format!(
                "embedder expects {} inputs, got {}",
                self.width,
                x.len()
            )));
        }
        Ok(match self.spec.kind {
            EmbeddingKind::Basis => QuantumState::Qubits(basis_embed(x)?),
            EmbeddingKind::Angle => QuantumState::Qubits(angle_embed(x)?),
            EmbeddingKind::Iqp => QuantumState::Qubits(iqp_embed(x, self.spec.layers)?),
            EmbeddingKind::Qaoa => {
                QuantumState::Qubits(qaoa_embed(x, &self.qaoa_params, self.spec.layers)?)
            }
            EmbeddingKind::Displacement => QuantumState::Gaussian(displacement_embed(x)?),
            EmbeddingKind::Squeezing => QuantumState::Gaussian(squeezing_embed(x)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn re(state: &PureState) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn basis_states() {
        assert_eq!(re(&basis_embed(&[0.0]).unwrap()), vec![1.0, 0.0]);
        assert_eq!(
            re(&basis_embed(&[1.0, 0.0]).unwrap()),
            vec![0.0, 0.0, 1.0, 0.0]
        );
        // 0b111 = 7
        let s = basis_embed(&[1.0, 1.0, 1.0]).unwrap();
        let idx = [1usize, 1, 1].iter().fold(0, |acc, b| acc * 2 + b);
        assert_eq!(s.amplitudes()[idx].re, 1.0);
        assert!(basis_embed(&[0.5]).unwrap_err().is_validation());
    }

    #[test]
    fn angle_states() {
        assert_eq!(re(&angle_embed(&[0.0]).unwrap()), vec![1.0, 0.0]);
        let s = angle_embed(&[PI]).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-12);
        let s = angle_embed(&[PI / 2.0]).unwrap();
        for a in s.amplitudes() {
            assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn iqp_zero_input_is_uniform() {
        for d in 1..=4 {
            let s = iqp_embed(&vec![0.0; d], 1).unwrap();
            let expected = 2f64.powf(-(d as f64) / 2.0);
            for a in s.amplitudes() {
                assert!((a.re - expected).abs() < 1e-12 && a.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qaoa_zero_angles_identity() {
        let params = vec![0.0; qaoa_param_count(1, 1)];
        assert_eq!(params.len(), 4);
        let s = qaoa_embed(&[0.0], &params, 1).unwrap();
        assert_eq!(s.qubit_count(), 2);
        assert_eq!(re(&s), vec![1.0, 0.0, 0.0, 0.0]);
        assert!(qaoa_embed(&[0.0], &[0.0; 3], 1)
            .unwrap_err()
            .to_string()
            .contains("parameters"));
    }

    #[test]
    fn tensor_join_examples() {
        let zero = basis_embed(&[0.0]).unwrap();
        let one = basis_embed(&[1.0]).unwrap();
        assert_eq!(
            re(&tensor_join(&[&zero, &zero]).unwrap()),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            re(&tensor_join(&[&zero, &one]).unwrap()),
            vec![0.0, 1.0, 0.0, 0.0]
        );
        let h = angle_embed(&[PI / 2.0]).unwrap();
        let j = tensor_join(&[&h, &h]).unwrap();
        for a in j.amplitudes() {
            assert!((a.re - FRAC_1_SQRT_2 * FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(tensor_join(&[]).is_err());
    }

    #[test]
    fn register_cap_enforced() {
        let spec = EmbeddingSpec::new(EmbeddingKind::Angle, Granularity::Row);
        let err = Embedder::new(&spec, 23).unwrap_err();
        assert!(err.to_string().contains("statevector limit"));
        assert!(Embedder::new(&spec, 20).is_ok());
        let cell = EmbeddingSpec::new(EmbeddingKind::Iqp, Granularity::Cell);
        assert!(Embedder::new(&cell, 23).is_ok());
        let cv = EmbeddingSpec::new(EmbeddingKind::Squeezing, Granularity::Row);
        assert!(Embedder::new(&cv, 23).is_ok());
    }

    #[test]
    fn embedder_resolves_seeded_qaoa_params() {
        let spec = EmbeddingSpec::new(EmbeddingKind::Qaoa, Granularity::Row).with_layers(2);
        let a = Embedder::new(&spec, 3).unwrap();
        let b = Embedder::new(&spec, 3).unwrap();
        assert_eq!(a.qaoa_params().len(), 12);
        assert_eq!(a.qaoa_params(), b.qaoa_params());
        assert_eq!(
            a.embed(&[0.1, 0.2, 0.3]).unwrap(),
            b.embed(&[0.1, 0.2, 0.3]).unwrap()
        );
        let bad = spec.clone().with_qaoa_params(vec![0.0; 5]);
        assert!(Embedder::new(&bad, 3).is_err());
    }
}
