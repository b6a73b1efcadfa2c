//! Imaginary-time evolution drivers: the operator-projected and
//! metric-tensor step pipelines, forward-Euler updates, trajectory records
//! and the dense exact-propagation oracle.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ansatz::{HeaAnsatz, ParameterVector};
use crate::dense;
use crate::error::{Error, Result};
use crate::gradients::{
    derivative_matrix_detailed, energy_gradient_detailed, estimate_energy, qgt_vqite_detailed,
};
use crate::measure::{
    initial_parameter_rng, target_vector_strings, CostLedger, CostPhase, Estimator, EstimatorMode,
    GroupedSet, PhaseCost,
};
use crate::pauli::{anticommutator_with_sum, PauliString, PauliSum};
use crate::solver::{eiv_solve, pinv_solve, EivProblem, OmegaA, PinvConfig};
use crate::state::StateVector;
use crate::tfim::{build_tfim, exact_ground_energy, operator_set, OperatorSet, SetName, TfimParams};
use crate::Algorithm;

/// Linear solver used for the per-step update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Truncated-SVD pseudo-inverse on G theta_dot = b (default).
    Pinv,
    /// Experimental maximum-likelihood error-in-variables solve; requires
    /// shot mode, where entry variances are available.
    Eiv,
}

/// Per-run evolution settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub algorithm: Algorithm,
    /// Observable set for the operator-projected algorithm; ignored by the
    /// metric-tensor variant.
    pub operator_set: Option<SetName>,
    /// Imaginary-time step (inverse energy units).
    pub delta: f64,
    pub steps: usize,
    pub mode: EstimatorMode,
    /// Pseudo-inverse cutoff; `None` picks the tabulated default for the
    /// algorithm, set, mode and field ratio.
    pub rcond: Option<f64>,
    pub seed: u64,
    pub solver: SolverKind,
}

impl EvolutionConfig {
    fn validate(&self) -> Result<()> {
        if self.delta < 0.0 {
            return Err(Error::Validation(format!(
                "time step must be non-negative, got {}",
                self.delta
            )));
        }
        if self.algorithm == Algorithm::Ovqite && self.operator_set.is_none() {
            return Err(Error::Validation(
                "operator-projected evolution needs an operator set".into(),
            ));
        }
        if self.solver == SolverKind::Eiv && self.mode == EstimatorMode::Exact {
            return Err(Error::Validation(
                "the error-in-variables solver needs shot mode".into(),
            ));
        }
        Ok(())
    }

    /// The cutoff actually used: the explicit value, or the tabulated default.
    pub fn effective_rcond(&self, field_ratio: f64) -> f64 {
        self.rcond
            .unwrap_or_else(|| default_rcond(self.algorithm, self.operator_set, self.mode, field_ratio))
    }
}

/// Tabulated pseudo-inverse cutoffs that stabilize each algorithm, keyed by
/// mode and field ratio (the critical point h/J = 1 uses tighter values for
/// the nearest-neighbor set). Sets outside the tabulated pair reuse the
/// S_IM values.
pub fn default_rcond(
    algorithm: Algorithm,
    set: Option<SetName>,
    mode: EstimatorMode,
    field_ratio: f64,
) -> f64 {
    let critical = (field_ratio - 1.0).abs() < 1e-9;
    let sampled = mode != EstimatorMode::Exact;
    match algorithm {
        Algorithm::Vqite => {
            if sampled {
                1e-3
            } else {
                1e-6
            }
        }
        Algorithm::Ovqite => match set {
            Some(SetName::SH) => 1e-4,
            _ => match (sampled, critical) {
                (false, false) => 1e-5,
                (false, true) => 5e-6,
                (true, false) => 1e-4,
                (true, true) => 5e-5,
            },
        },
    }
}

/// Linear-system ingredients assembled by one step.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    /// Observable derivative matrix (operator-projected steps only).
    pub m: Option<DMatrix<f64>>,
    /// Target vector over the set (operator-projected steps only).
    pub v: Option<DVector<f64>>,
    pub g: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Constant term of the quadratic loss, 1/2 sum |V|^2.
    pub loss_constant: f64,
}

/// Per-step diagnostics.
///
/// Rows describe the state after the step's update (tau = step * delta);
/// `energy_estimated` is the estimate obtained from this step's
/// measurements, which are taken at the pre-update parameters, while
/// `energy_exact` and `rel_error` are the exact diagnostic channel at the
/// post-update parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub tau: f64,
    pub energy_exact: f64,
    pub energy_estimated: f64,
    pub rel_error: f64,
    pub loss: f64,
    /// Singular values kept by the pseudo-inverse (parameter count for the
    /// likelihood solver).
    pub sv_kept: usize,
    pub circuits_step: u64,
    pub shots_step: u64,
    pub measurements_cumulative: u64,
    /// Set when regularization truncated the whole spectrum and the update
    /// was a no-op.
    pub truncated_all: bool,
    /// Per-phase (circuits, shots) breakdown of this step.
    pub phase_costs: Vec<(CostPhase, PhaseCost)>,
}

/// One evolution step's outputs.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub theta_next: ParameterVector,
    pub record: StepRecord,
    pub workspace: StepWorkspace,
}

/// Full-run record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub final_theta: ParameterVector,
    pub ground_energy: f64,
    pub initial_energy: f64,
    /// Populated when a solver failure aborted the run early.
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_error)
    }

    /// Cumulative measurements at the first step reaching the target
    /// relative error, if any.
    pub fn measurements_to_target(&self, target: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.rel_error <= target)
            .map(|r| r.measurements_cumulative)
    }
}

fn plugin_variance(value: f64, shots: u64) -> f64 {
    ((1.0 - value * value) / shots as f64).max(0.0)
}

fn lookup(estimates: &HashMap<PauliString, f64>, s: &PauliString) -> Result<f64> {
    if s.is_identity() {
        return Ok(1.0);
    }
    estimates
        .get(s)
        .copied()
        .ok_or_else(|| Error::IncompleteEstimates(s.to_string()))
}

/// Target vector over the set: v_j = -<{H, O_j}> + 2 <H> <O_j>, assembled
/// from previously estimated string expectations.
pub fn v_vector(
    estimates: &HashMap<PauliString, f64>,
    h: &PauliSum,
    set: &OperatorSet,
) -> Result<DVector<f64>> {
    Ok(v_vector_detailed(estimates, None, h, set)?.values)
}

pub(crate) struct TargetVectorDetail {
    pub values: DVector<f64>,
    pub variances: Option<DVector<f64>>,
    /// <H> from the same estimates.
    pub energy: f64,
}

pub(crate) fn v_vector_detailed(
    estimates: &HashMap<PauliString, f64>,
    shots: Option<u64>,
    h: &PauliSum,
    set: &OperatorSet,
) -> Result<TargetVectorDetail> {
    let var_of = |value: f64, s: &PauliString| -> f64 {
        match shots {
            Some(n) if !s.is_identity() => plugin_variance(value, n),
            _ => 0.0,
        }
    };
    let mut energy = 0.0;
    let mut energy_var = 0.0;
    for (p, c) in h.terms() {
        let value = lookup(estimates, p)?;
        energy += c.re * value;
        energy_var += c.re * c.re * var_of(value, p);
    }

    let mut values = DVector::zeros(set.len());
    let mut variances = DVector::zeros(set.len());
    for (j, member) in set.members.iter().enumerate() {
        let expansion = anticommutator_with_sum(h, member)?;
        let mut anti = 0.0;
        let mut anti_var = 0.0;
        for (s, c) in expansion.terms() {
            debug_assert!(c.im.abs() < 1e-10, "anticommutator coefficient {c}");
            let value = lookup(estimates, s)?;
            anti += c.re * value;
            anti_var += c.re * c.re * var_of(value, s);
        }
        let member_value = lookup(estimates, member)?;
        let member_var = var_of(member_value, member);
        values[j] = -anti + 2.0 * energy * member_value;
        // Independence approximation across estimates.
        variances[j] = anti_var
            + 4.0 * (energy * energy * member_var + member_value * member_value * energy_var);
    }
    Ok(TargetVectorDetail {
        values,
        variances: shots.map(|_| variances),
        energy,
    })
}

struct SolveOutput {
    theta_dot: DVector<f64>,
    sv_kept: usize,
    truncated_all: bool,
}

/// Noisy linear problem handed to the likelihood solver: observed design
/// and target with their entry-wise shot variances.
struct NoisySystem<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    a_var: &'a DMatrix<f64>,
    b_var: &'a DVector<f64>,
}

fn solve_update(
    cfg: &EvolutionConfig,
    rcond: f64,
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    noisy: Option<NoisySystem<'_>>,
) -> Result<SolveOutput> {
    match cfg.solver {
        SolverKind::Pinv => {
            let (theta_dot, report) = pinv_solve(g, b, &PinvConfig::new(rcond)?)?;
            Ok(SolveOutput {
                theta_dot,
                sv_kept: report.kept,
                truncated_all: report.kept == 0,
            })
        }
        SolverKind::Eiv => {
            let system = noisy
                .ok_or_else(|| Error::Solver("missing variance data for likelihood solve".into()))?;
            // Variance floors keep Omega_B positive definite when an
            // estimate sits exactly on +/-1.
            let omega_b = DMatrix::from_diagonal(&system.b_var.map(|v| v.max(1e-12)));
            let problem = EivProblem {
                a: system.a.clone(),
                b: system.b.clone(),
                omega_b,
                omega_a: OmegaA::Diagonal(system.a_var.map(|v| v.max(1e-12))),
                lambda: f64::INFINITY,
            };
            let solution = eiv_solve(&problem, 500, 1e-8)?;
            Ok(SolveOutput {
                theta_dot: solution.x,
                sv_kept: g.ncols(),
                truncated_all: false,
            })
        }
    }
}

fn euler_update(theta: &ParameterVector, delta: f64, theta_dot: &DVector<f64>) -> ParameterVector {
    ParameterVector::new(
        theta
            .as_slice()
            .iter()
            .zip(theta_dot.iter())
            .map(|(t, d)| t + delta * d)
            .collect(),
    )
}

fn quadratic_loss(g: &DMatrix<f64>, b: &DVector<f64>, theta_dot: &DVector<f64>, constant: f64) -> f64 {
    0.5 * theta_dot.dot(&(g * theta_dot)) - theta_dot.dot(b) + constant
}

struct LedgerMark([PhaseCost; 5]);

fn ledger_mark(ledger: &CostLedger) -> LedgerMark {
    LedgerMark(core::array::from_fn(|i| ledger.phase(CostPhase::ALL[i])))
}

fn ledger_delta(ledger: &CostLedger, mark: &LedgerMark) -> Vec<(CostPhase, PhaseCost)> {
    CostPhase::ALL
        .iter()
        .enumerate()
        .filter_map(|(i, &phase)| {
            let now = ledger.phase(phase);
            let before = mark.0[i];
            let delta = PhaseCost {
                circuits: now.circuits - before.circuits,
                shots: now.shots - before.shots,
            };
            (delta.circuits > 0).then_some((phase, delta))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish_step(
    cfg: &EvolutionConfig,
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    e0: f64,
    step: u64,
    energy_estimated: f64,
    workspace: StepWorkspace,
    solve: SolveOutput,
    ledger: &CostLedger,
    mark: &LedgerMark,
) -> Result<StepOutcome> {
    let theta_next = euler_update(theta, cfg.delta, &solve.theta_dot);
    let state = ansatz.prepare_state(&theta_next)?;
    let energy_exact = state.expectation_sum(h)?;
    let rel_error = (energy_exact - e0).abs() / e0.abs();
    let loss = quadratic_loss(&workspace.g, &workspace.b, &solve.theta_dot, workspace.loss_constant);
    let phase_costs = ledger_delta(ledger, mark);
    let circuits_step = phase_costs.iter().map(|(_, c)| c.circuits).sum();
    let shots_step = phase_costs.iter().map(|(_, c)| c.shots).sum();
    let record = StepRecord {
        step,
        tau: step as f64 * cfg.delta,
        energy_exact,
        energy_estimated,
        rel_error,
        loss,
        sv_kept: solve.sv_kept,
        circuits_step,
        shots_step,
        measurements_cumulative: ledger.measurements(),
        truncated_all: solve.truncated_all,
        phase_costs,
    };
    Ok(StepOutcome {
        theta_next,
        record,
        workspace,
    })
}

/// One operator-projected step: build M and v over the set, form
/// G = M^T M and b = M^T v, solve for theta_dot and apply the Euler update.
#[allow(clippy::too_many_arguments)]
pub fn ovqite_step(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    set: &OperatorSet,
    cfg: &EvolutionConfig,
    step: u64,
    e0: f64,
    ledger: &mut CostLedger,
) -> Result<StepOutcome> {
    let est = Estimator {
        mode: cfg.mode,
        seed: cfg.seed,
        step,
    };
    let mark = ledger_mark(ledger);
    let m_detail = derivative_matrix_detailed(ansatz, theta, set, &est, ledger)?;

    // Target-vector phase: estimate every string in the anticommutator
    // expansions, the Hamiltonian and the set from one parameter point.
    let strings = target_vector_strings(h, set)?;
    let grouped = GroupedSet::new(&strings);
    let state = ansatz.prepare_state(theta)?;
    let values = grouped.estimate(&state, &est, CostPhase::TargetVector, 0)?;
    ledger.credit(
        CostPhase::TargetVector,
        grouped.group_count() as u64,
        est.mode.shots_per_circuit(),
    );
    let estimates: HashMap<PauliString, f64> = strings.into_iter().zip(values).collect();
    let shots = match est.mode {
        EstimatorMode::Exact => None,
        EstimatorMode::Shots(n) => Some(n),
    };
    let v_detail = v_vector_detailed(&estimates, shots, h, set)?;

    let g = m_detail.values.transpose() * &m_detail.values;
    let b = m_detail.values.transpose() * &v_detail.values;
    let loss_constant = 0.5 * v_detail.values.norm_squared();

    let rcond = cfg.effective_rcond(field_ratio_of(h));
    let solve = solve_update(
        cfg,
        rcond,
        &g,
        &b,
        match (&m_detail.variances, &v_detail.variances) {
            (Some(mv), Some(vv)) => Some(NoisySystem {
                a: &m_detail.values,
                b: &v_detail.values,
                a_var: mv,
                b_var: vv,
            }),
            _ => None,
        },
    )?;
    let workspace = StepWorkspace {
        m: Some(m_detail.values.clone()),
        v: Some(v_detail.values.clone()),
        g,
        b,
        loss_constant,
    };
    finish_step(
        cfg,
        ansatz,
        theta,
        h,
        e0,
        step,
        v_detail.energy,
        workspace,
        solve,
        ledger,
        &mark,
    )
}

/// One metric-tensor step: G from survival probabilities, b from the
/// parameter-shift energy gradient, then the same solve and update.
#[allow(clippy::too_many_arguments)]
pub fn vqite_step(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    h: &PauliSum,
    cfg: &EvolutionConfig,
    step: u64,
    e0: f64,
    ledger: &mut CostLedger,
) -> Result<StepOutcome> {
    let est = Estimator {
        mode: cfg.mode,
        seed: cfg.seed,
        step,
    };
    let mark = ledger_mark(ledger);
    let g_detail = qgt_vqite_detailed(ansatz, theta, &est, ledger)?;
    let b_detail = energy_gradient_detailed(ansatz, theta, h, &est, ledger)?;
    let energy_estimated = estimate_energy(ansatz, theta, h, &est, ledger)?;

    let rcond = cfg.effective_rcond(field_ratio_of(h));
    let solve = solve_update(
        cfg,
        rcond,
        &g_detail.values,
        &b_detail.values,
        match (&g_detail.variances, &b_detail.variances) {
            (Some(gv), Some(bv)) => Some(NoisySystem {
                a: &g_detail.values,
                b: &b_detail.values,
                a_var: gv,
                b_var: bv,
            }),
            _ => None,
        },
    )?;
    let workspace = StepWorkspace {
        m: None,
        v: None,
        g: g_detail.values,
        b: b_detail.values,
        // The variational-distance constant (the energy variance) is not
        // measured; the loss column carries the quadratic part only.
        loss_constant: 0.0,
    };
    finish_step(
        cfg,
        ansatz,
        theta,
        h,
        e0,
        step,
        energy_estimated,
        workspace,
        solve,
        ledger,
        &mark,
    )
}

/// Field-to-coupling ratio recovered from the Hamiltonian coefficients, used
/// only to pick tabulated rcond defaults; falls back to 0 when the shape is
/// not TFIM-like.
fn field_ratio_of(h: &PauliSum) -> f64 {
    let mut coupling: Option<f64> = None;
    let mut field: Option<f64> = None;
    for (p, c) in h.terms() {
        match p.weight() {
            2 => coupling = coupling.or(Some(-c.re)),
            1 => field = field.or(Some(-c.re)),
            _ => {}
        }
    }
    match (coupling, field) {
        (Some(j), Some(hf)) if j > 0.0 => hf / j,
        _ => 0.0,
    }
}

/// Runs the configured evolution on the chain model.
///
/// `initial` overrides the seeded random start; `reference_energy` skips the
/// dense ground-state diagonalization when the caller already knows E0.
/// A solver failure aborts the run and returns the partial trajectory with
/// `aborted` set.
pub fn run_evolution(
    cfg: &EvolutionConfig,
    model: &TfimParams,
    ansatz: &HeaAnsatz,
    initial: Option<&ParameterVector>,
    reference_energy: Option<f64>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if ansatz.n() != model.n {
        return Err(Error::Dimension(format!(
            "ansatz acts on {} qubits, model on {}",
            ansatz.n(),
            model.n
        )));
    }
    let h = build_tfim(model)?;
    let set = match cfg.algorithm {
        Algorithm::Ovqite => Some(operator_set(model, cfg.operator_set.unwrap())?),
        Algorithm::Vqite => None,
    };
    let e0 = match reference_energy {
        Some(e) => e,
        None => exact_ground_energy(&h)?,
    };
    let mut theta = match initial {
        Some(t) => {
            if t.len() != ansatz.num_parameters() {
                return Err(Error::Dimension(format!(
                    "initial parameters have length {}, expected {}",
                    t.len(),
                    ansatz.num_parameters()
                )));
            }
            t.clone()
        }
        None => {
            let mut rng = initial_parameter_rng(cfg.seed);
            ParameterVector::random(ansatz.num_parameters(), &mut rng)
        }
    };
    let initial_energy = ansatz.prepare_state(&theta)?.expectation_sum(&h)?;

    let mut ledger = CostLedger::new();
    let mut records = Vec::with_capacity(cfg.steps.max(1));
    let mut aborted = None;

    if cfg.steps == 0 {
        records.push(StepRecord {
            step: 0,
            tau: 0.0,
            energy_exact: initial_energy,
            energy_estimated: initial_energy,
            rel_error: (initial_energy - e0).abs() / e0.abs(),
            loss: 0.0,
            sv_kept: 0,
            circuits_step: 0,
            shots_step: 0,
            measurements_cumulative: 0,
            truncated_all: false,
            phase_costs: Vec::new(),
        });
    }

    for step in 1..=cfg.steps as u64 {
        let outcome = match cfg.algorithm {
            Algorithm::Ovqite => ovqite_step(
                ansatz,
                &theta,
                &h,
                set.as_ref().unwrap(),
                cfg,
                step,
                e0,
                &mut ledger,
            ),
            Algorithm::Vqite => vqite_step(ansatz, &theta, &h, cfg, step, e0, &mut ledger),
        };
        match outcome {
            Ok(out) => {
                records.push(out.record);
                theta = out.theta_next;
            }
            Err(Error::Solver(message)) => {
                aborted = Some(message);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(Trajectory {
        records,
        final_theta: theta,
        ground_energy: e0,
        initial_energy,
        aborted,
    })
}

/// Exact imaginary-time propagation of a pure initial state by dense
/// eigendecomposition; returns `<O>` for each query at each grid time.
pub fn exact_ite_oracle(
    h: &PauliSum,
    initial: &StateVector,
    tau_grid: &[f64],
    queries: &[PauliSum],
) -> Result<Vec<Vec<f64>>> {
    const MAX_QUBITS: usize = 10;
    if h.n() > MAX_QUBITS {
        return Err(Error::Capability(format!(
            "exact propagation supports n <= {MAX_QUBITS}, got {}",
            h.n()
        )));
    }
    if initial.n() != h.n() {
        return Err(Error::Dimension(format!(
            "state acts on {} qubits, Hamiltonian on {}",
            initial.n(),
            h.n()
        )));
    }
    let eigen = dense::hermitian_eigen(h, MAX_QUBITS)?;
    let dim = 1usize << h.n();
    let psi0 = DVector::from_column_slice(initial.amplitudes());
    let coeffs = eigen.vectors.adjoint() * &psi0;
    let lambda_min = eigen.values[0];

    let query_matrices: Vec<DMatrix<Complex64>> = queries.iter().map(dense::sum_matrix).collect();
    let mut table = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        if tau < 0.0 {
            return Err(Error::Validation(format!("negative imaginary time {tau}")));
        }
        let mut v = DVector::zeros(dim);
        for k in 0..dim {
            // Spectrum shifted by lambda_min; the shift cancels on
            // normalization and keeps the exponentials bounded.
            let weight = (-(tau) * (eigen.values[k] - lambda_min)).exp();
            v += eigen.vectors.column(k) * (coeffs[k] * Complex64::new(weight, 0.0));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Validation(
                "initial state has no weight in the propagated spectrum".into(),
            ));
        }
        v /= Complex64::new(norm, 0.0);
        let row = query_matrices
            .iter()
            .map(|o| (v.adjoint() * o * &v)[(0, 0)].re)
            .collect();
        table.push(row);
    }
    Ok(table)
}

/// Trajectory CSV with provenance header comments; one row per step.
pub fn trajectory_csv(trajectory: &Trajectory, provenance: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in provenance {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    if let Some(reason) = &trajectory.aborted {
        out.push_str(&format!("# aborted = {reason}\n"));
    }
    out.push_str(
        "step,tau,energy_exact,energy_estimated,rel_error,loss,sv_kept,circuits_step,shots_step,measurements_cumulative\n",
    );
    for r in &trajectory.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.tau,
            r.energy_exact,
            r.energy_estimated,
            r.rel_error,
            r.loss,
            r.sv_kept,
            r.circuits_step,
            r.shots_step,
            r.measurements_cumulative
        ));
    }
    out
}

/// Per-phase ledger CSV: one row per (step, phase) with nonzero circuits.
pub fn ledger_csv(trajectory: &Trajectory, provenance: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in provenance {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str("step,phase,circuits,shots,cumulative_measurements\n");
    for r in &trajectory.records {
        for (phase, cost) in &r.phase_costs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.step,
                phase.label(),
                cost.circuits,
                cost.shots,
                r.measurements_cumulative
            ));
        }
    }
    out
}
