//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the simulator or the strategy planner.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qenc_core::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
}

/// `gate` acting on `qubit` of an `n`-qubit register, qubit 0 most significant.
pub fn on(gate: &CMat, qubit: usize, n: usize) -> CMat {
    (0..n).fold(CMat::identity(1, 1), |acc, k| {
        let g = if k == qubit {
            gate.clone()
        } else {
            CMat::identity(2, 2)
        };
        acc.kronecker(&g)
    })
}

/// `exp(i * scale * h)` via the dense matrix exponential.
pub fn expi(h: &CMat, scale: f64) -> CMat {
    (h * c(0., scale)).exp()
}

fn zero_ket(n: usize) -> CMat {
    let mut v = CMat::zeros(1 << n, 1);
    v[(0, 0)] = c(1., 0.);
    v
}

pub fn dense_iqp(x: &[f64], layers: usize) -> Vec<Complex64> {
    let n = x.len();
    let mut h = CMat::zeros(1 << n, 1 << n);
    for j in 0..n {
        h += on(&pauli_z(), j, n) * c(x[j], 0.);
        for k in j + 1..n {
            h += on(&pauli_z(), j, n) * on(&pauli_z(), k, n) * c(x[j] * x[k], 0.);
        }
    }
    let hadamards = (0..n).fold(CMat::identity(1 << n, 1 << n), |acc, j| {
        acc * on(&hadamard(), j, n)
    });
    let layer = expi(&h, 1.0) * hadamards;
    let mut psi = zero_ket(n);
    for _ in 0..layers {
        psi = &layer * psi;
    }
    psi.iter().copied().collect()
}

pub fn dense_qaoa(x: &[f64], params: &[f64], layers: usize) -> Vec<Complex64> {
    let w = x.len().max(2);
    let mut padded = x.to_vec();
    padded.resize(w, 0.0);
    let mut psi = zero_ket(w);
    for l in 0..layers {
        let p = &params[2 * w * l..2 * w * (l + 1)];
        for j in 0..w {
            psi = expi(&on(&pauli_x(), j, w), -padded[j] / 2.0) * psi;
        }
        for j in 0..w {
            let zz = on(&pauli_z(), j, w) * on(&pauli_z(), (j + 1) % w, w);
            psi = expi(&zz, -p[j] / 2.0) * psi;
        }
        for j in 0..w {
            psi = expi(&on(&pauli_y(), j, w), -p[w + j] / 2.0) * psi;
        }
    }
    psi.iter().copied().collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Single-mode operation applied to the vacuum in a truncated Fock space.
#[derive(Debug, Clone, Copy)]
pub enum FockOp {
    /// `exp(alpha (a^dag - a))` with real alpha.
    Displace(f64),
    /// `exp(r/2 (a^2 - a^dag^2))`.
    Squeeze(f64),
}

/// `(mean_x, mean_p, var_x, var_p)` with `x = a + a^dag`, `p = -i (a - a^dag)`,
/// everything truncated to `cutoff` Fock levels.
pub fn fock_moments(op: FockOp, cutoff: usize) -> [f64; 4] {
    let mut a = CMat::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = c((n as f64).sqrt(), 0.);
    }
    let ad = a.adjoint();
    let generator = match op {
        FockOp::Displace(alpha) => (&ad - &a) * c(alpha, 0.),
        FockOp::Squeeze(r) => (&a * &a - &ad * &ad) * c(r / 2.0, 0.),
    };
    let mut vac = CMat::zeros(cutoff, 1);
    vac[(0, 0)] = c(1., 0.);
    let psi = generator.exp() * vac;
    let x = &a + &ad;
    let p = (&a - &ad) * c(0., -1.);
    let expect = |m: &CMat| (psi.adjoint() * m * &psi)[(0, 0)].re;
    let (mx, mp) = (expect(&x), expect(&p));
    [
        mx,
        mp,
        expect(&(&x * &x)) - mx * mx,
        expect(&(&p * &p)) - mp * mp,
    ]
}

fn bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Expected embed calls per strategy, counted with plain hash sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCounts {
    pub de_cell: u64,
    pub de_row: u64,
    pub ils: u64,
    pub gds: u64,
    pub cc_ils: u64,
    pub cc_gds: u64,
}

pub fn oracle_counts(m: &FeatureMatrix) -> OracleCounts {
    let (n, d) = (m.n_rows(), m.n_cols());
    let rows: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..d).map(|j| bits(m.get(i, j))).collect())
        .collect();
    let values: HashSet<u64> = rows.iter().flatten().copied().collect();
    let distinct_rows: HashSet<&Vec<u64>> = rows.iter().collect();
    let mut per_class: BTreeMap<u32, (HashSet<u64>, HashSet<&Vec<u64>>)> = BTreeMap::new();
    if let Some(labels) = m.labels() {
        for (row, y) in rows.iter().zip(labels) {
            let e = per_class.entry(*y).or_default();
            e.0.extend(row.iter().copied());
            e.1.insert(row);
        }
    }
    OracleCounts {
        de_cell: (n * d) as u64,
        de_row: n as u64,
        ils: distinct_rows.len() as u64,
        gds: values.len() as u64,
        cc_ils: per_class.values().map(|c| c.1.len() as u64).sum(),
        cc_gds: per_class.values().map(|c| c.0.len() as u64).sum(),
    }
}

/// Labelled matrix with deliberate redundancy: values come from a small pool
/// (including both signed zeros) and some rows repeat earlier ones.
pub fn redundant_matrix(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_d: usize,
    binary: bool,
) -> FeatureMatrix {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=max_d);
    let pool: Vec<f64> = if binary {
        vec![0.0, 1.0]
    } else {
        let k = rng.random_range(1..=12);
        let mut p: Vec<f64> = (0..k)
            .map(|_| (rng.random::<f64>() * 3.0).round() / 3.0 + rng.random_range(0..3) as f64)
            .collect();
        p.push(0.0);
        p.push(-0.0);
        p
    };
    let classes = rng.random_range(1..=3u32);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        if !rows.is_empty() && rng.random_bool(0.3) {
            let src = rng.random_range(0..rows.len());
            rows.push(rows[src].clone());
        } else {
            rows.push(
                (0..d)
                    .map(|_| pool[rng.random_range(0..pool.len())])
                    .collect(),
            );
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    FeatureMatrix::from_rows(&rows, Some(labels)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two Gaussian blobs `separation` apart along every axis, labels 0 and 1.
pub fn blobs(n: usize, d: usize, separation: f64, seed: u64) -> (FeatureMatrix, Vec<u32>) {
    let mut r = rng(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u32;
        let shift = if y == 1 {
            separation / 2.0
        } else {
            -separation / 2.0
        };
        rows.push(
            (0..d)
                .map(|_| shift + r.sample(normal))
                .collect::<Vec<f64>>(),
        );
        labels.push(y);
    }
    (
        FeatureMatrix::from_rows(&rows, Some(labels.clone())).unwrap(),
        labels,
    )
}
