//! Dense-matrix backends for desk-scale exact computations: operator
//! matrices from Pauli data and Hermitian eigendecompositions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, Phase};

/// Dense 2^n x 2^n matrix of a Pauli string (phase included).
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << p.n();
    let x_mask = p.x_mask() as usize;
    let zy_mask = p.zy_mask() as usize;
    let prefactor = p.phase().as_complex() * Phase::from_exponent((p.y_count() % 4) as u8).as_complex();
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let sign = if (col & zy_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        m[(col ^ x_mask, col)] = prefactor * sign;
    }
    m
}

/// Dense matrix of a Pauli sum.
pub fn sum_matrix(h: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << h.n();
    let mut m = DMatrix::zeros(dim, dim);
    for (p, c) in h.terms() {
        m += pauli_matrix(p) * c;
    }
    m
}

/// True when the dense matrix of the sum is purely real, which holds exactly
/// when every term has an even number of Y letters and a real coefficient.
pub fn has_real_matrix(h: &PauliSum) -> bool {
    h.terms()
        .all(|(p, c)| p.y_count() % 2 == 0 && c.im.abs() <= 1e-14)
}

/// Real representation of a real-matrix Pauli sum.
fn real_sum_matrix(h: &PauliSum) -> DMatrix<f64> {
    let dim = 1usize << h.n();
    let mut m = DMatrix::zeros(dim, dim);
    for (p, c) in h.terms() {
        let x_mask = p.x_mask() as usize;
        let zy_mask = p.zy_mask() as usize;
        // i^y_count is +/-1 for even y_count.
        let pref = if p.y_count() % 4 == 0 { c.re } else { -c.re };
        for col in 0..dim {
            let sign = if (col & zy_mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            m[(col ^ x_mask, col)] += pref * sign;
        }
    }
    m
}

/// Smallest eigenvalue of a Hermitian Pauli sum by dense diagonalization.
pub fn smallest_eigenvalue(h: &PauliSum, max_qubits: usize) -> Result<f64> {
    if h.n() > max_qubits {
        return Err(Error::Capability(format!(
            "dense diagonalization supports n <= {max_qubits}, got n = {}",
            h.n()
        )));
    }
    if !h.is_hermitian(1e-10) {
        return Err(Error::Validation("sum is not Hermitian".into()));
    }
    if h.is_empty() {
        return Ok(0.0);
    }
    let eigenvalues: Vec<f64> = if has_real_matrix(h) {
        real_sum_matrix(h).symmetric_eigenvalues().iter().copied().collect()
    } else {
        sum_matrix(h).symmetric_eigenvalues().iter().copied().collect()
    };
    eigenvalues
        .into_iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .ok_or_else(|| Error::Solver("eigendecomposition returned no values".into()))
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn hermitian_eigen(h: &PauliSum, max_qubits: usize) -> Result<HermitianEigen> {
    if h.n() > max_qubits {
        return Err(Error::Capability(format!(
            "dense eigendecomposition supports n <= {max_qubits}, got n = {}",
            h.n()
        )));
    }
    if !h.is_hermitian(1e-10) {
        return Err(Error::Validation("sum is not Hermitian".into()));
    }
    let m = sum_matrix(h);
    let eigen = nalgebra::SymmetricEigen::new(m);
    let dim = eigen.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].partial_cmp(&eigen.eigenvalues[b]).unwrap());
    let values = DVector::from_iterator(dim, order.iter().map(|&i| eigen.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(dim, dim);
    for (new_col, &old_col) in order.iter().enumerate() {
        vectors.set_column(new_col, &eigen.eigenvectors.column(old_col));
    }
    Ok(HermitianEigen { values, vectors })
}
