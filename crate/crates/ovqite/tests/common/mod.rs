//! Hand-rolled dense-matrix oracle shared by the integration tests. Built
//! from literal 2x2 Pauli matrices and Kronecker products, independent of
//! the library's operator machinery.

#![allow(dead_code)]

use num_complex::Complex64;
use ovqite::{PauliOp, PauliString, PauliSum, StateVector};

pub type CMat = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn letter_matrix(op: PauliOp) -> CMat {
    match op {
        PauliOp::I => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
        PauliOp::X => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        PauliOp::Y => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
        PauliOp::Z => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

/// Kronecker product a (x) b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = (a.len(), a[0].len());
    let (rb, cb) = (b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = (a.len(), a[0].len());
    let cb = b[0].len();
    let mut out = vec![vec![c(0.0, 0.0); cb]; ra];
    for i in 0..ra {
        for j in 0..cb {
            for k in 0..ca {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn mat_add(a: &CMat, b: &CMat) -> CMat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn mat_scale(a: &CMat, s: Complex64) -> CMat {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn mat_distance(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// Dense matrix of a Pauli string. Qubit 0 is the least significant index
/// bit, so the Kronecker chain runs from the highest qubit down.
pub fn string_matrix(p: &PauliString) -> CMat {
    let mut m = vec![vec![c(1.0, 0.0)]];
    for &op in p.letters().iter().rev() {
        m = kron(&m, &letter_matrix(op));
    }
    mat_scale(&m, p.phase().as_complex())
}

pub fn sum_matrix(h: &PauliSum) -> CMat {
    let dim = 1 << h.n();
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for (p, coeff) in h.terms() {
        m = mat_add(&m, &mat_scale(&string_matrix(p), coeff));
    }
    m
}

/// <psi| M |psi> against the dense matrix.
pub fn dense_expectation(state: &StateVector, m: &CMat) -> Complex64 {
    let amps = state.amplitudes();
    let mut acc = c(0.0, 0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            acc += amps[i].conj() * entry * amps[j];
        }
    }
    acc
}

/// A random normalized complex state from the given RNG.
pub fn random_state<R: rand::Rng>(n: usize, rng: &mut R) -> StateVector {
    let dim = 1usize << n;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps).unwrap()
}

pub fn random_string<R: rand::Rng>(n: usize, rng: &mut R) -> PauliString {
    let ops = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    PauliString::from_letters((0..n).map(|_| ops[rng.gen_range(0..4)]).collect())
}
