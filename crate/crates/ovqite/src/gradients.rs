//! Parameter-shift derivatives of observable expectations and the
//! survival-probability route to the quantum geometric tensor.
//!
//! The shift is fixed at s = pi/2, where 1/(2 sin s) = 1/2 and the rule is
//! exact for the half-angle Ry convention.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::ansatz::{HeaAnsatz, ParameterVector};
use crate::error::{Error, Result};
use crate::measure::{CostLedger, CostPhase, Estimator, EstimatorMode, GroupedSet};
use crate::pauli::{PauliString, PauliSum};
use crate::state::{overlap_with_ry, Gate};
use crate::tfim::OperatorSet;

/// Parameter-shift displacement.
pub const PSR_SHIFT: f64 = std::f64::consts::FRAC_PI_2;

/// Observable derivative by the two-point parameter-shift rule:
/// (<O>_{theta + s e_j} - <O>_{theta - s e_j}) / (2 sin s).
///
/// In exact mode this equals the analytic derivative to machine precision.
/// This is the single-observable reference path; batched evaluation with
/// grouping and ledger accounting happens in [`derivative_matrix`].
pub fn psr_derivative(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    j: usize,
    observable: &PauliString,
    est: &Estimator,
) -> Result<f64> {
    if j >= ansatz.num_parameters() {
        return Err(Error::Dimension(format!(
            "parameter index {j} out of range for N_theta={}",
            ansatz.num_parameters()
        )));
    }
    let grouped = GroupedSet::new(std::slice::from_ref(observable));
    let mut values = [0.0; 2];
    for (k, sign) in [1.0f64, -1.0].iter().enumerate() {
        let state = ansatz.prepare_shifted(theta, j, sign * PSR_SHIFT)?;
        let point = (2 * j + k) as u64;
        values[k] = grouped.estimate(&state, est, CostPhase::DerivativeMatrix, point)?[0];
    }
    Ok((values[0] - values[1]) / (2.0 * PSR_SHIFT.sin()))
}

/// Derivative matrix with optional per-entry shot variances.
pub(crate) struct DerivativeMatrixDetail {
    pub values: DMatrix<f64>,
    pub variances: Option<DMatrix<f64>>,
}

pub(crate) fn derivative_matrix_detailed(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    set: &OperatorSet,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<DerivativeMatrixDetail> {
    if set.is_empty() {
        return Err(Error::Validation("operator set is empty".into()));
    }
    let n_params = ansatz.num_parameters();
    let grouped = GroupedSet::new(&set.members);
    let point_values: Vec<Vec<f64>> = (0..2 * n_params)
        .into_par_iter()
        .map(|t| {
            let j = t / 2;
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            let state = ansatz.prepare_shifted(theta, j, sign * PSR_SHIFT)?;
            grouped.estimate(&state, est, CostPhase::DerivativeMatrix, t as u64)
        })
        .collect::<Result<_>>()?;
    ledger.credit(
        CostPhase::DerivativeMatrix,
        2 * n_params as u64 * grouped.group_count() as u64,
        est.mode.shots_per_circuit(),
    );

    let rows = set.len();
    let mut values = DMatrix::zeros(rows, n_params);
    for j in 0..n_params {
        for i in 0..rows {
            values[(i, j)] = (point_values[2 * j][i] - point_values[2 * j + 1][i]) / 2.0;
        }
    }
    let variances = match est.mode {
        EstimatorMode::Exact => None,
        EstimatorMode::Shots(shots) => {
            let mut var = DMatrix::zeros(rows, n_params);
            for j in 0..n_params {
                for i in 0..rows {
                    let vp = estimator_variance(point_values[2 * j][i], shots);
                    let vm = estimator_variance(point_values[2 * j + 1][i], shots);
                    var[(i, j)] = (vp + vm) / 4.0;
                }
            }
            Some(var)
        }
    };
    Ok(DerivativeMatrixDetail { values, variances })
}

/// Matrix of observable derivatives M[i][j] = d<O_i>/d theta_j over an
/// operator set, evaluated by parameter shift with grouped measurements.
pub fn derivative_matrix(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    set: &OperatorSet,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<DMatrix<f64>> {
    Ok(derivative_matrix_detailed(ansatz, theta, set, est, ledger)?.values)
}

/// Plug-in single-shot estimator variance of a Pauli expectation.
fn estimator_variance(value: f64, shots: u64) -> f64 {
    ((1.0 - value * value) / shots as f64).max(0.0)
}

fn sample_survival<R: Rng>(p0: f64, shots: u64, rng: &mut R) -> f64 {
    let p = p0.clamp(0.0, 1.0);
    let binomial = Binomial::new(shots, p).expect("valid binomial");
    binomial.sample(rng) as f64 / shots as f64
}

/// Survival probability |<psi_theta|psi_theta'>|^2, exact or as the sampled
/// frequency of the all-zeros outcome of the inverse-circuit measurement.
pub fn survival_probability(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    theta_prime: &ParameterVector,
    est: &Estimator,
) -> Result<f64> {
    if theta.len() != theta_prime.len() {
        return Err(Error::Dimension(format!(
            "parameter vectors of length {} and {}",
            theta.len(),
            theta_prime.len()
        )));
    }
    let bra = ansatz.prepare_state(theta)?;
    let ket = ansatz.prepare_state(theta_prime)?;
    // Normalized fidelity: dividing by the (unit up to rounding) state
    // norms keeps p0 in [0, 1] and makes the theta' = theta case exactly 1.
    let p0 = bra.inner_product(&ket)?.norm_sqr()
        / (bra.inner_product(&bra)?.re * ket.inner_product(&ket)?.re);
    match est.mode {
        EstimatorMode::Exact => Ok(p0),
        EstimatorMode::Shots(shots) => {
            let mut rng = est.standalone_rng();
            Ok(sample_survival(p0, shots, &mut rng))
        }
    }
}

/// Linear index of the pair (i, j), i <= j, in row-major upper-triangle order.
fn pair_index(i: usize, j: usize, n: usize) -> u64 {
    (i * (2 * n - i + 1) / 2 + (j - i)) as u64
}

pub(crate) struct MetricTensorDetail {
    pub values: DMatrix<f64>,
    pub variances: Option<DMatrix<f64>>,
}

/// All four survival probabilities per parameter pair, computed from
/// forward/backward state caches so each (i, sign) walk re-propagates the
/// circuit suffix once instead of preparing four full states per pair.
fn survival_grid(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
) -> Result<Vec<Vec<[f64; 4]>>> {
    let n_params = ansatz.num_parameters();
    let (forward, prepared) = ansatz.forward_states(theta)?;
    let backward = ansatz.backward_states(theta, &prepared)?;
    let s = PSR_SHIFT;

    // off[i][j - i - 1] = [F(+,+), F(+,-), F(-,+), F(-,-)] for i < j.
    let walk = |i: usize, sign: f64| -> Result<Vec<[f64; 2]>> {
        let mut w = forward[i].clone();
        w.apply_gate(&Gate::Ry {
            target: ansatz.param_qubit(i),
            angle: theta[i] + sign * s,
        })?;
        let mut row = Vec::with_capacity(n_params - i - 1);
        for j in i + 1..n_params {
            for g in ansatz.gates_between(j - 1) {
                w.apply_gate(&g)?;
            }
            let q = ansatz.param_qubit(j);
            let fp = overlap_with_ry(&backward[j], &w, q, theta[j] + s).norm_sqr();
            let fm = overlap_with_ry(&backward[j], &w, q, theta[j] - s).norm_sqr();
            row.push([fp, fm]);
            w.apply_gate(&Gate::Ry { target: q, angle: theta[j] })?;
        }
        Ok(row)
    };

    (0..n_params)
        .into_par_iter()
        .map(|i| {
            let plus = walk(i, 1.0)?;
            let minus = walk(i, -1.0)?;
            let q = ansatz.param_qubit(i);
            let f2p = overlap_with_ry(&backward[i], &forward[i], q, theta[i] + 2.0 * s).norm_sqr();
            let f2m = overlap_with_ry(&backward[i], &forward[i], q, theta[i] - 2.0 * s).norm_sqr();
            let mut row = Vec::with_capacity(n_params - i);
            row.push([f2p, 1.0, 1.0, f2m]);
            for (p, m) in plus.iter().zip(&minus) {
                row.push([p[0], p[1], m[0], m[1]]);
            }
            Ok(row)
        })
        .collect()
}

pub(crate) fn qgt_vqite_detailed(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<MetricTensorDetail> {
    let n_params = ansatz.num_parameters();
    let grid = survival_grid(ansatz, theta)?;
    let pairs = (n_params * (n_params + 1) / 2) as u64;
    ledger.credit(CostPhase::MetricTensor, 4 * pairs, est.mode.shots_per_circuit());

    let mut values = DMatrix::zeros(n_params, n_params);
    let mut variances = match est.mode {
        EstimatorMode::Exact => None,
        EstimatorMode::Shots(_) => Some(DMatrix::zeros(n_params, n_params)),
    };
    for i in 0..n_params {
        for j in i..n_params {
            let mut f = grid[i][j - i];
            if let EstimatorMode::Shots(shots) = est.mode {
                let base = 4 * pair_index(i, j, n_params);
                for (k, value) in f.iter_mut().enumerate() {
                    let mut rng = est.rng(CostPhase::MetricTensor, base + k as u64);
                    *value = sample_survival(*value, shots, &mut rng);
                }
                if let Some(var) = variances.as_mut() {
                    let v: f64 = f
                        .iter()
                        .map(|&p| (p * (1.0 - p) / shots as f64).max(0.0))
                        .sum();
                    var[(i, j)] = v / 64.0;
                    var[(j, i)] = var[(i, j)];
                }
            }
            let g = -0.125 * (f[0] - f[1] - f[2] + f[3]);
            values[(i, j)] = g;
            values[(j, i)] = g;
        }
    }
    Ok(MetricTensorDetail { values, variances })
}

/// Quantum geometric tensor by double parameter shift of the survival
/// probability: G_ij = -(1/8) [F(+,+) - F(+,-) - F(-,+) + F(-,-)] with
/// F(a,b) = |<psi_theta | psi_{theta + s(a e_i + b e_j)}>|^2.
///
/// Only i <= j entries are measured and mirrored; the ledger counts four
/// circuits per pair.
pub fn qgt_vqite(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<DMatrix<f64>> {
    Ok(qgt_vqite_detailed(ansatz, theta, est, ledger)?.values)
}

pub(crate) struct EnergyGradientDetail {
    pub values: DVector<f64>,
    pub variances: Option<DVector<f64>>,
}

pub(crate) fn energy_gradient_detailed(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<EnergyGradientDetail> {
    if !h.is_hermitian(1e-10) {
        return Err(Error::Validation("Hamiltonian is not Hermitian".into()));
    }
    let n_params = ansatz.num_parameters();
    let strings: Vec<PauliString> = h
        .terms()
        .filter(|(s, _)| !s.is_identity())
        .map(|(s, _)| s.clone())
        .collect();
    let coeffs: Vec<f64> = h
        .terms()
        .filter(|(s, _)| !s.is_identity())
        .map(|(_, c)| c.re)
        .collect();
    let id_coeff = h.coefficient(&PauliString::identity(h.n())).re;
    let grouped = GroupedSet::new(&strings);

    // (energy, variance) at each shifted point.
    let points: Vec<(f64, f64)> = (0..2 * n_params)
        .into_par_iter()
        .map(|t| {
            let j = t / 2;
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            let state = ansatz.prepare_shifted(theta, j, sign * PSR_SHIFT)?;
            let values = grouped.estimate(&state, est, CostPhase::EnergyGradient, t as u64)?;
            let energy = id_coeff
                + coeffs
                    .iter()
                    .zip(&values)
                    .map(|(c, v)| c * v)
                    .sum::<f64>();
            let variance = match est.mode {
                EstimatorMode::Exact => 0.0,
                EstimatorMode::Shots(shots) => coeffs
                    .iter()
                    .zip(&values)
                    .map(|(c, v)| c * c * estimator_variance(*v, shots))
                    .sum(),
            };
            Ok((energy, variance))
        })
        .collect::<Result<_>>()?;
    ledger.credit(
        CostPhase::EnergyGradient,
        2 * n_params as u64 * grouped.group_count() as u64,
        est.mode.shots_per_circuit(),
    );

    let values = DVector::from_iterator(
        n_params,
        (0..n_params).map(|j| -(points[2 * j].0 - points[2 * j + 1].0) / 2.0),
    );
    let variances = match est.mode {
        EstimatorMode::Exact => None,
        EstimatorMode::Shots(_) => Some(DVector::from_iterator(
            n_params,
            (0..n_params).map(|j| (points[2 * j].1 + points[2 * j + 1].1) / 4.0),
        )),
    };
    Ok(EnergyGradientDetail { values, variances })
}

/// Negative energy gradient -d<H>/d theta by parameter shift over the
/// Hamiltonian's measurement groups.
pub fn energy_gradient_vqite(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<DVector<f64>> {
    Ok(energy_gradient_detailed(ansatz, theta, h, est, ledger)?.values)
}

/// Energy estimate at theta from the Hamiltonian's measurement groups,
/// credited to the standalone energy phase.
pub fn estimate_energy(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    est: &Estimator,
    ledger: &mut CostLedger,
) -> Result<f64> {
    if !h.is_hermitian(1e-10) {
        return Err(Error::Validation("Hamiltonian is not Hermitian".into()));
    }
    let state = ansatz.prepare_state(theta)?;
    let strings: Vec<PauliString> = h
        .terms()
        .filter(|(s, _)| !s.is_identity())
        .map(|(s, _)| s.clone())
        .collect();
    let grouped = GroupedSet::new(&strings);
    let values = grouped.estimate(&state, est, CostPhase::Energy, 0)?;
    ledger.credit(
        CostPhase::Energy,
        grouped.group_count() as u64,
        est.mode.shots_per_circuit(),
    );
    let id_coeff = h.coefficient(&PauliString::identity(h.n())).re;
    let energy = id_coeff
        + h.terms()
            .filter(|(s, _)| !s.is_identity())
            .zip(&values)
            .map(|((_, c), v)| c.re * v)
            .sum::<f64>();
    Ok(energy)
}
