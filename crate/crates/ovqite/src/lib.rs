//! Simulator for variational quantum imaginary-time evolution with
//! operator projection.
//!
//! The crate provides phase-exact Pauli algebra, an exact statevector
//! engine with shot-noise emulation, a hardware-efficient ansatz with
//! parameter-shift derivatives, qubit-wise-commuting measurement grouping
//! with circuit/shot accounting, regularized and maximum-likelihood linear
//! solvers, and transverse-field Ising benchmark drivers for both the
//! metric-tensor (VQITE) and operator-projected (OVQITE) evolutions.

pub mod ansatz;
pub mod dense;
pub mod error;
pub mod evolve;
pub mod gradients;
pub mod measure;
pub mod pauli;
pub mod solver;
pub mod state;
pub mod tfim;

/// Which imaginary-time evolution variant drives the parameter update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// McLachlan evolution with the quantum geometric tensor as metric.
    Vqite,
    /// Operator-projected evolution over a chosen observable set.
    Ovqite,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Vqite => write!(f, "vqite"),
            Algorithm::Ovqite => write!(f, "ovqite"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = error::Error;

    fn from_str(s: &str) -> error::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vqite" => Ok(Algorithm::Vqite),
            "ovqite" => Ok(Algorithm::Ovqite),
            other => Err(error::Error::Validation(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

pub use ansatz::{HeaAnsatz, ParameterVector};
pub use error::{Error, Result};
pub use evolve::{
    default_rcond, exact_ite_oracle, ledger_csv, ovqite_step, run_evolution, trajectory_csv,
    v_vector, vqite_step, EvolutionConfig, SolverKind, StepOutcome, StepRecord, StepWorkspace,
    Trajectory,
};
pub use gradients::{
    derivative_matrix, energy_gradient_vqite, estimate_energy, psr_derivative, qgt_vqite,
    survival_probability, PSR_SHIFT,
};
pub use measure::{
    anticommutator_expansion_max_groups, anticommutator_grouped_count,
    anticommutator_naive_count, basis_rotation, count_circuits,
    estimate_expectations, estimate_group, group_expectations_exact, group_qubit_wise,
    initial_parameter_rng, target_vector_naive_count, target_vector_strings, CostLedger,
    CostPhase, Estimator, EstimatorMode, GroupedSet, MeasurementGroup, MeasurementStrategy,
    PhaseCost, StepCircuitCounts,
};
pub use pauli::{anticommutator_with_sum, PauliOp, PauliString, PauliSum, Phase};
pub use solver::{
    eiv_gradient, eiv_log_likelihood, eiv_solve, pinv_solve, EivProblem, EivSolution, OmegaA,
    PinvConfig, SolveReport,
};
pub use state::{Gate, StateVector};
pub use tfim::{
    build_tfim, exact_ground_energy, full_pauli_basis, operator_set, OperatorSet, SetName,
    TfimParams,
};
