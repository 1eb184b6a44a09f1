//! Dense statevector kernels. Qubit 0 is the most significant bit of the
//! basis index.

use num_complex::Complex64;

pub type Gate = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
fn mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// `+1` if `qubit` is `|0>` in basis state `index`, `-1` otherwise.
#[inline]
pub fn z_sign(index: usize, n_qubits: usize, qubit: usize) -> f64 {
    if index & mask(n_qubits, qubit) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn zero_state(n_qubits: usize) -> Vec<Complex64> {
    let mut amps = vec![ZERO; 1 << n_qubits];
    amps[0] = Complex64::new(1.0, 0.0);
    amps
}

pub fn apply_single(amps: &mut [Complex64], n_qubits: usize, qubit: usize, gate: &Gate) {
    let m = mask(n_qubits, qubit);
    for i in 0..amps.len() {
        if i & m == 0 {
            let j = i | m;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = gate[0][0] * a0 + gate[0][1] * a1;
            amps[j] = gate[1][0] * a0 + gate[1][1] * a1;
        }
    }
}

/// Multiplies each amplitude by `exp(i * phase(index))`.
pub fn apply_phase(amps: &mut [Complex64], phase: impl Fn(usize) -> f64) {
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, phase(i));
    }
}

pub fn hadamard() -> Gate {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// `exp(-i theta X / 2)`
pub fn rx(theta: f64) -> Gate {
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let mis = Complex64::new(0.0, -s);
    [[c, mis], [mis, c]]
}

/// `exp(-i theta Y / 2)`
pub fn ry(theta: f64) -> Gate {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}
