//! Exact statevector engine: gate application, Pauli expectation values and
//! computational-basis sampling.
//!
//! Basis-state indices are little-endian: bit q of an index holds the state
//! of qubit q, with bit value 1 meaning the qubit is in |1>.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, Phase};

const NORM_TOLERANCE: f64 = 1e-10;

/// Quantum gates supported by the engine.
///
/// `Ry` uses the half-angle convention exp(-i angle Y / 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    H { target: usize },
    /// S-dagger, diag(1, -i).
    Sdg { target: usize },
    X { target: usize },
}

impl Gate {
    fn validate(&self, n: usize) -> Result<()> {
        let check = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(Error::Dimension(format!(
                    "gate qubit {q} out of range for n={n}"
                )))
            }
        };
        match *self {
            Gate::Ry { target, .. } | Gate::H { target } | Gate::Sdg { target } | Gate::X { target } => {
                check(target)
            }
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::Validation("CNOT control equals target".into()));
                }
                Ok(())
            }
        }
    }
}

/// Normalized vector of 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state |0...0>.
    pub fn zero_state(n: usize) -> Self {
        assert!(n <= 28, "statevector limited to 28 qubits");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    /// Builds a state from raw amplitudes, checking normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Validation(format!(
                "state norm^2 = {norm_sq}, not normalized"
            )));
        }
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |amplitude|^2 for every basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        match *gate {
            Gate::Ry { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.map_pairs(target, |a0, a1| (c * a0 - s * a1, s * a0 + c * a1));
            }
            Gate::H { target } => {
                let inv = std::f64::consts::FRAC_1_SQRT_2;
                self.map_pairs(target, |a0, a1| (inv * (a0 + a1), inv * (a0 - a1)));
            }
            Gate::Sdg { target } => {
                let minus_i = Complex64::new(0.0, -1.0);
                self.map_pairs(target, |a0, a1| (a0, minus_i * a1));
            }
            Gate::X { target } => {
                self.map_pairs(target, |a0, a1| (a1, a0));
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for base in 0..self.amps.len() {
                    if base & cmask != 0 && base & tmask == 0 {
                        self.amps.swap(base, base | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a gate sequence in order.
    pub fn apply_gates(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    fn map_pairs(&mut self, target: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
        let tmask = 1usize << target;
        for base in 0..self.amps.len() {
            if base & tmask == 0 {
                let hi = base | tmask;
                let (a0, a1) = (self.amps[base], self.amps[hi]);
                let (b0, b1) = f(a0, a1);
                self.amps[base] = b0;
                self.amps[hi] = b1;
            }
        }
    }

    /// <self|other>.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "states act on {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Exact expectation value of a canonical (phase +1) Pauli string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "operator acts on {} qubits, state on {}",
                p.n(),
                self.n
            )));
        }
        if p.phase() != Phase::PLUS_ONE {
            return Err(Error::Validation(
                "expectation expects a phase +1 operator".into(),
            ));
        }
        let x_mask = p.x_mask() as usize;
        let zy_mask = p.zy_mask() as usize;
        let prefactor = Phase::from_exponent((p.y_count() % 4) as u8).as_complex();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, amp) in self.amps.iter().enumerate() {
            let sign = if (b & zy_mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            acc += sign * self.amps[b ^ x_mask].conj() * amp;
        }
        let value = prefactor * acc;
        debug_assert!(value.im.abs() < 1e-9, "Pauli expectation residue {}", value.im);
        Ok(value.re)
    }

    /// Exact expectation of a Hermitian Pauli sum.
    pub fn expectation_sum(&self, h: &PauliSum) -> Result<f64> {
        if h.n() != self.n {
            return Err(Error::Dimension(format!(
                "sum acts on {} qubits, state on {}",
                h.n(),
                self.n
            )));
        }
        if !h.is_hermitian(NORM_TOLERANCE) {
            return Err(Error::Validation(
                "expectation of a non-Hermitian Pauli sum".into(),
            ));
        }
        let mut total = 0.0;
        for (p, c) in h.terms() {
            let ev = if p.is_identity() {
                1.0
            } else {
                self.expectation(p)?
            };
            total += c.re * ev;
        }
        Ok(total)
    }

    /// Samples `shots` basis states by inverse-CDF over the cumulative
    /// probability distribution; returns a dense count per basis index.
    pub fn sample_counts<R: Rng>(&self, shots: u64, rng: &mut R) -> Vec<u64> {
        let mut cumulative = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let last = self.amps.len() - 1;
        let mut counts = vec![0u64; self.amps.len()];
        for _ in 0..shots {
            let u: f64 = rng.gen();
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            counts[idx] += 1;
        }
        counts
    }

    /// Sampled measurement outcomes as a basis-index -> count map.
    pub fn sample_bitstrings<R: Rng>(&self, shots: u64, rng: &mut R) -> BTreeMap<u64, u64> {
        self.sample_counts(shots, rng)
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(b, c)| (b as u64, c))
            .collect()
    }
}

/// <bra| Ry_target(angle) |ket> without materializing the rotated state.
///
/// Used by the metric-tensor evaluation, where one rotation is scanned over
/// many bra caches.
pub fn overlap_with_ry(bra: &StateVector, ket: &StateVector, target: usize, angle: f64) -> Complex64 {
    debug_assert_eq!(bra.n, ket.n);
    let tmask = 1usize << target;
    let (s, c) = (angle / 2.0).sin_cos();
    let mut acc = Complex64::new(0.0, 0.0);
    for base in 0..ket.amps.len() {
        if base & tmask == 0 {
            let hi = base | tmask;
            let (a0, a1) = (ket.amps[base], ket.amps[hi]);
            acc += bra.amps[base].conj() * (c * a0 - s * a1);
            acc += bra.amps[hi].conj() * (s * a0 + c * a1);
        }
    }
    acc
}
