//! Hardware-efficient ansatz: an initial column of Ry rotations followed by
//! layers of (staircase CNOT chain, Ry column).
//!
//! Parameter p = l*n + q is the Ry angle on qubit q in column l, applied in
//! index order; the staircase runs CNOT(q -> q+1) for q = 0..n-2 with no
//! wrap-around. Total parameter count is n*(L+1). All gates are real, so
//! prepared states have real amplitudes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::state::{Gate, StateVector};

/// Circuit parameters in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterVector(values)
    }

    /// Uniform draw from [-pi, pi) per component.
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        let values = (0..len)
            .map(|_| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * rng.gen::<f64>())
            .collect();
        ParameterVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Copy with component `j` shifted by `delta`.
    pub fn shifted(&self, j: usize, delta: f64) -> Self {
        let mut values = self.0.clone();
        values[j] += delta;
        ParameterVector(values)
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(values: Vec<f64>) -> Self {
        ParameterVector(values)
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Hardware-efficient ansatz shape: qubit count and layer count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaAnsatz {
    n: usize,
    layers: usize,
}

impl HeaAnsatz {
    pub fn new(n: usize, layers: usize) -> Self {
        assert!(n >= 1, "ansatz needs at least one qubit");
        HeaAnsatz { n, layers }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// N_theta = n * (L + 1).
    pub fn num_parameters(&self) -> usize {
        self.n * (self.layers + 1)
    }

    /// Qubit acted on by parameter `p`.
    pub fn param_qubit(&self, p: usize) -> usize {
        p % self.n
    }

    /// The staircase chain inserted before each rotation column after the first.
    fn cnot_chain(&self) -> impl Iterator<Item = Gate> + '_ {
        (0..self.n.saturating_sub(1)).map(|q| Gate::Cnot {
            control: q,
            target: q + 1,
        })
    }

    fn check_len(&self, theta: &ParameterVector) -> Result<()> {
        if theta.len() != self.num_parameters() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                theta.len()
            )));
        }
        Ok(())
    }

    /// Full gate sequence for the given parameters.
    pub fn gates(&self, theta: &ParameterVector) -> Result<Vec<Gate>> {
        self.check_len(theta)?;
        let mut gates = Vec::with_capacity(self.num_parameters() + self.layers * (self.n - 1));
        for q in 0..self.n {
            gates.push(Gate::Ry { target: q, angle: theta[q] });
        }
        for l in 1..=self.layers {
            gates.extend(self.cnot_chain());
            for q in 0..self.n {
                gates.push(Gate::Ry { target: q, angle: theta[l * self.n + q] });
            }
        }
        Ok(gates)
    }

    /// U(theta)|0...0>.
    pub fn prepare_state(&self, theta: &ParameterVector) -> Result<StateVector> {
        let mut state = StateVector::zero_state(self.n);
        state.apply_gates(&self.gates(theta)?)?;
        Ok(state)
    }

    /// Preparation at theta with component `j` shifted by `delta`.
    pub fn prepare_shifted(&self, theta: &ParameterVector, j: usize, delta: f64) -> Result<StateVector> {
        if j >= self.num_parameters() {
            return Err(Error::Dimension(format!(
                "parameter index {j} out of range for N_theta={}",
                self.num_parameters()
            )));
        }
        self.prepare_state(&theta.shifted(j, delta))
    }

    /// Forward cache for overlap scans: `forward[k]` is the state right
    /// before the rotation of parameter k, and the fully prepared state.
    pub(crate) fn forward_states(&self, theta: &ParameterVector) -> Result<(Vec<StateVector>, StateVector)> {
        self.check_len(theta)?;
        let n_params = self.num_parameters();
        let mut forward = Vec::with_capacity(n_params);
        let mut state = StateVector::zero_state(self.n);
        for p in 0..n_params {
            if p > 0 && p % self.n == 0 {
                for g in self.cnot_chain() {
                    state.apply_gate(&g)?;
                }
            }
            forward.push(state.clone());
            state.apply_gate(&Gate::Ry {
                target: self.param_qubit(p),
                angle: theta[p],
            })?;
        }
        Ok((forward, state))
    }

    /// Backward cache: `backward[k]` is the prepared state pulled back
    /// through every gate strictly after the rotation of parameter k, so
    /// that <psi| U_after_k = backward[k]^dagger.
    pub(crate) fn backward_states(&self, theta: &ParameterVector, prepared: &StateVector) -> Result<Vec<StateVector>> {
        self.check_len(theta)?;
        let n_params = self.num_parameters();
        let mut state = prepared.clone();
        let mut rev = Vec::with_capacity(n_params);
        for p in (0..n_params).rev() {
            rev.push(state.clone());
            // Pull back through this parameter's rotation and, when the
            // parameter opens a column, the preceding CNOT chain.
            state.apply_gate(&Gate::Ry {
                target: self.param_qubit(p),
                angle: -theta[p],
            })?;
            if p > 0 && p % self.n == 0 {
                let chain: Vec<Gate> = self.cnot_chain().collect();
                for g in chain.iter().rev() {
                    state.apply_gate(g)?;
                }
            }
        }
        rev.reverse();
        Ok(rev)
    }

    /// Gates between parameter `p` and parameter `p + 1` (the CNOT chain when
    /// `p + 1` opens a new column, nothing otherwise).
    pub(crate) fn gates_between(&self, p: usize) -> Vec<Gate> {
        if p + 1 < self.num_parameters() && (p + 1).is_multiple_of(self.n) {
            self.cnot_chain().collect()
        } else {
            Vec::new()
        }
    }
}
