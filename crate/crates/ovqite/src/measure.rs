//! Qubit-wise-commuting measurement groups, basis-rotation synthesis,
//! shot-based expectation estimation and the circuit/shot cost ledger.

use std::collections::HashMap;

use indexmap::IndexSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::ansatz::{HeaAnsatz, ParameterVector};
use crate::error::{Error, Result};
use crate::pauli::{anticommutator_with_sum, PauliOp, PauliString, PauliSum};
use crate::state::{Gate, StateVector};
use crate::tfim::OperatorSet;
use crate::Algorithm;

/// A set of pairwise qubit-wise-commuting strings measured from one circuit.
///
/// `basis[q]` is the unique non-identity letter appearing among members at
/// qubit q, or I when every member is identity there.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub members: Vec<PauliString>,
    pub basis: Vec<PauliOp>,
}

/// Greedy first-fit grouping in input order: each string joins the first
/// group whose every member it qubit-wise commutes with, else opens a new
/// group. Deterministic for a fixed input order.
pub fn group_qubit_wise(paulis: &[PauliString]) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    'strings: for p in paulis {
        for group in groups.iter_mut() {
            let fits = group
                .members
                .iter()
                .all(|m| p.qubit_wise_commutes(m).unwrap_or(false));
            if fits {
                for (q, &l) in p.letters().iter().enumerate() {
                    if !l.is_identity() {
                        group.basis[q] = l;
                    }
                }
                group.members.push(p.clone());
                continue 'strings;
            }
        }
        groups.push(MeasurementGroup {
            basis: p.letters().to_vec(),
            members: vec![p.clone()],
        });
    }
    groups
}

/// Single-qubit rotations taking the group's basis to the computational
/// basis: X -> H, Y -> S-dagger then H, Z/I -> nothing.
pub fn basis_rotation(group: &MeasurementGroup) -> Vec<Gate> {
    let mut gates = Vec::new();
    for (q, &op) in group.basis.iter().enumerate() {
        match op {
            PauliOp::X => gates.push(Gate::H { target: q }),
            PauliOp::Y => {
                gates.push(Gate::Sdg { target: q });
                gates.push(Gate::H { target: q });
            }
            PauliOp::I | PauliOp::Z => {}
        }
    }
    gates
}

/// Member estimates from outcome weights (probabilities or frequencies) of
/// the rotated circuit: value = sum_b w(b) * prod_{q in support} (-1)^{b_q}.
fn reconstruct_members(weights: &[f64], members: &[PauliString]) -> Vec<f64> {
    members
        .iter()
        .map(|p| {
            let mask = p.support_mask() as usize;
            let mut v = 0.0;
            for (b, w) in weights.iter().enumerate() {
                if (b & mask).count_ones().is_multiple_of(2) {
                    v += w;
                } else {
                    v -= w;
                }
            }
            v
        })
        .collect()
}

/// Exact per-member expectations through the rotation + eigenvalue
/// reconstruction route (the infinite-shot limit of [`estimate_group`]).
pub fn group_expectations_exact(state: &StateVector, group: &MeasurementGroup) -> Result<Vec<f64>> {
    let mut rotated = state.clone();
    rotated.apply_gates(&basis_rotation(group))?;
    Ok(reconstruct_members(&rotated.probabilities(), &group.members))
}

/// Shot-based per-member estimates: rotate, sample bitstrings, reconstruct.
pub fn estimate_group<R: Rng>(
    state: &StateVector,
    group: &MeasurementGroup,
    shots: u64,
    rng: &mut R,
) -> Result<HashMap<PauliString, f64>> {
    if shots == 0 {
        return Err(Error::Validation("shot count must be >= 1".into()));
    }
    let values = estimate_group_values(state, group, shots, rng)?;
    Ok(group.members.iter().cloned().zip(values).collect())
}

fn estimate_group_values<R: Rng>(
    state: &StateVector,
    group: &MeasurementGroup,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut rotated = state.clone();
    rotated.apply_gates(&basis_rotation(group))?;
    let counts = rotated.sample_counts(shots, rng);
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    Ok(reconstruct_members(&freqs, &group.members))
}

/// How expectation values are obtained: exactly, or from sampled shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Exact,
    Shots(u64),
}

impl EstimatorMode {
    pub fn shots_per_circuit(&self) -> u64 {
        match self {
            EstimatorMode::Exact => 0,
            EstimatorMode::Shots(n) => *n,
        }
    }
}

/// Measurement phases tracked by the ledger and used as RNG stream domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostPhase {
    /// Observable derivative matrix (parameter-shift evaluations of the set).
    DerivativeMatrix,
    /// Projected-evolution target vector (anticommutators, H and the set).
    TargetVector,
    /// Metric tensor from survival probabilities.
    MetricTensor,
    /// Energy gradient by parameter shift on the Hamiltonian.
    EnergyGradient,
    /// Standalone energy estimate.
    Energy,
}

impl CostPhase {
    pub const ALL: [CostPhase; 5] = [
        CostPhase::DerivativeMatrix,
        CostPhase::TargetVector,
        CostPhase::MetricTensor,
        CostPhase::EnergyGradient,
        CostPhase::Energy,
    ];

    fn index(self) -> usize {
        match self {
            CostPhase::DerivativeMatrix => 0,
            CostPhase::TargetVector => 1,
            CostPhase::MetricTensor => 2,
            CostPhase::EnergyGradient => 3,
            CostPhase::Energy => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CostPhase::DerivativeMatrix => "M",
            CostPhase::TargetVector => "v",
            CostPhase::MetricTensor => "G",
            CostPhase::EnergyGradient => "b",
            CostPhase::Energy => "energy",
        }
    }
}

/// Per-phase circuit and shot counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCost {
    pub circuits: u64,
    pub shots: u64,
}

/// Circuit and shot accounting across a run.
///
/// Exact-mode evaluations still credit circuits (what hardware would have
/// prepared) with zero shots, so noiseless runs report the same circuit-count
/// curves as sampled ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostLedger {
    costs: [PhaseCost; 5],
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    pub fn credit(&mut self, phase: CostPhase, circuits: u64, shots_per_circuit: u64) {
        let slot = &mut self.costs[phase.index()];
        slot.circuits += circuits;
        slot.shots += circuits * shots_per_circuit;
    }

    pub fn phase(&self, phase: CostPhase) -> PhaseCost {
        self.costs[phase.index()]
    }

    pub fn circuits_total(&self) -> u64 {
        self.costs.iter().map(|c| c.circuits).sum()
    }

    pub fn shots_total(&self) -> u64 {
        self.costs.iter().map(|c| c.shots).sum()
    }

    /// Total measurement count; equals shots * circuits for uniform shots.
    pub fn measurements(&self) -> u64 {
        self.shots_total()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-circuit stream from (master seed, step, domain, circuit).
/// Independent of execution order, so parallel schedules reproduce serial
/// output bit for bit.
pub(crate) fn derive_stream(seed: u64, step: u64, domain: u8, circuit: u64) -> ChaCha8Rng {
    let mut s = splitmix(seed ^ 0x243F_6A88_85A3_08D3);
    s = splitmix(s ^ step);
    s = splitmix(s ^ ((domain as u64) << 56 | 0x4528_21E6_38D0_1377));
    s = splitmix(s ^ circuit);
    let mut key = [0u8; 32];
    let mut word = s;
    for chunk in key.chunks_mut(8) {
        word = splitmix(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Domain tag used for drawing initial parameters.
const DOMAIN_INIT: u8 = 255;
const DOMAIN_STANDALONE: u8 = 254;

fn phase_domain(phase: CostPhase) -> u8 {
    phase.index() as u8
}

/// Estimation context: mode plus the stream coordinates that make sampled
/// runs reproducible.
#[derive(Debug, Clone, Copy)]
pub struct Estimator {
    pub mode: EstimatorMode,
    pub seed: u64,
    pub step: u64,
}

impl Estimator {
    pub fn exact() -> Self {
        Estimator { mode: EstimatorMode::Exact, seed: 0, step: 0 }
    }

    pub fn shots(n_sh: u64, seed: u64, step: u64) -> Self {
        Estimator { mode: EstimatorMode::Shots(n_sh), seed, step }
    }

    pub(crate) fn rng(&self, phase: CostPhase, circuit: u64) -> ChaCha8Rng {
        derive_stream(self.seed, self.step, phase_domain(phase), circuit)
    }

    pub(crate) fn standalone_rng(&self) -> ChaCha8Rng {
        derive_stream(self.seed, self.step, DOMAIN_STANDALONE, 0)
    }
}

/// Initial-parameter stream for a master seed.
pub fn initial_parameter_rng(seed: u64) -> ChaCha8Rng {
    derive_stream(seed, 0, DOMAIN_INIT, 0)
}

/// A grouped operator list with the mapping back to input positions.
#[derive(Debug, Clone)]
pub struct GroupedSet {
    groups: Vec<MeasurementGroup>,
    /// For each group, every input index of each member (duplicate input
    /// strings share one measurement).
    positions: Vec<Vec<Vec<usize>>>,
    len: usize,
}

impl GroupedSet {
    pub fn new(paulis: &[PauliString]) -> Self {
        let groups = group_qubit_wise(paulis);
        let mut index_of: HashMap<&PauliString, Vec<usize>> = HashMap::new();
        for (i, p) in paulis.iter().enumerate() {
            index_of.entry(p).or_default().push(i);
        }
        let positions = groups
            .iter()
            .map(|g| g.members.iter().map(|m| index_of[m].clone()).collect())
            .collect();
        GroupedSet { groups, positions, len: paulis.len() }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    /// Estimates all input strings from one prepared state. `point` indexes
    /// the evaluation point within the phase; circuit streams are
    /// `point * group_count + group`.
    pub fn estimate(
        &self,
        state: &StateVector,
        est: &Estimator,
        phase: CostPhase,
        point: u64,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len];
        for (g, (group, positions)) in self.groups.iter().zip(&self.positions).enumerate() {
            let values = match est.mode {
                EstimatorMode::Exact => group_expectations_exact(state, group)?,
                EstimatorMode::Shots(shots) => {
                    let mut rng = est.rng(phase, point * self.groups.len() as u64 + g as u64);
                    estimate_group_values(state, group, shots, &mut rng)?
                }
            };
            for (slots, value) in positions.iter().zip(values) {
                for &pos in slots {
                    out[pos] = value;
                }
            }
        }
        Ok(out)
    }
}

/// Groups and estimates expectation values for a list of strings on the
/// ansatz state, crediting the ledger with one circuit per group.
///
/// Identity strings are not measured; their value is exactly 1.
pub fn estimate_expectations(
    ansatz: &HeaAnsatz,
    theta: &ParameterVector,
    paulis: &[PauliString],
    est: &Estimator,
    phase: CostPhase,
    ledger: &mut CostLedger,
) -> Result<HashMap<PauliString, f64>> {
    let state = ansatz.prepare_state(theta)?;
    let measured: Vec<PauliString> = paulis.iter().filter(|p| !p.is_identity()).cloned().collect();
    let grouped = GroupedSet::new(&measured);
    let values = grouped.estimate(&state, est, phase, 0)?;
    ledger.credit(phase, grouped.group_count() as u64, est.mode.shots_per_circuit());
    let mut map: HashMap<PauliString, f64> = measured.into_iter().zip(values).collect();
    for p in paulis {
        if p.is_identity() {
            map.insert(p.clone(), 1.0);
        }
    }
    Ok(map)
}

/// Measurement scheduling strategy for circuit counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementStrategy {
    /// Every string measured individually.
    Naive,
    /// Qubit-wise-commuting groups measured simultaneously.
    Grouped,
}

/// Static per-step circuit counts by phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepCircuitCounts {
    pub entries: Vec<(CostPhase, u64)>,
}

impl StepCircuitCounts {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn phase(&self, phase: CostPhase) -> u64 {
        self.entries
            .iter()
            .find(|(p, _)| *p == phase)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    }
}

/// Distinct non-identity strings needed by the target-vector phase: every
/// anticommutator {H, O} expansion, the Hamiltonian strings and the set
/// itself, deduplicated in that order.
pub fn target_vector_strings(h: &PauliSum, set: &OperatorSet) -> Result<Vec<PauliString>> {
    let mut strings: IndexSet<PauliString> = IndexSet::new();
    for member in &set.members {
        let expansion = anticommutator_with_sum(h, member)?;
        for (s, _) in expansion.terms() {
            if !s.is_identity() {
                strings.insert(s.clone());
            }
        }
    }
    for (s, _) in h.terms() {
        if !s.is_identity() {
            strings.insert(s.clone());
        }
    }
    for member in &set.members {
        if !member.is_identity() {
            strings.insert(member.clone());
        }
    }
    Ok(strings.into_iter().collect())
}

/// Naive per-string circuit count of the target-vector phase:
/// sum_j N_{{H,O_j}} + |S| + N_H, with no cross-term deduplication.
pub fn target_vector_naive_count(h: &PauliSum, set: &OperatorSet) -> Result<u64> {
    let mut anticommutator_terms = 0u64;
    for member in &set.members {
        let expansion = anticommutator_with_sum(h, member)?;
        anticommutator_terms += expansion
            .terms()
            .filter(|(s, _)| !s.is_identity())
            .count() as u64;
    }
    Ok(anticommutator_terms + set.len() as u64 + h.len() as u64)
}

/// Naive circuit count of the anticommutator expansions alone (the
/// quadratically growing piece of the target-vector phase).
pub fn anticommutator_naive_count(h: &PauliSum, set: &OperatorSet) -> Result<u64> {
    let mut count = 0u64;
    for member in &set.members {
        let expansion = anticommutator_with_sum(h, member)?;
        count += expansion
            .terms()
            .filter(|(s, _)| !s.is_identity())
            .count() as u64;
    }
    Ok(count)
}

/// Grouped circuit count for the deduplicated anticommutator union. Grows
/// slowly with n: the mixed strings X_a Z_d Z_{d+1} demand bases separating
/// every (site, bond) pair, which no constant-size basis family can do.
pub fn anticommutator_grouped_count(h: &PauliSum, set: &OperatorSet) -> Result<u64> {
    let mut strings: IndexSet<PauliString> = IndexSet::new();
    for member in &set.members {
        let expansion = anticommutator_with_sum(h, member)?;
        for (s, _) in expansion.terms() {
            if !s.is_identity() {
                strings.insert(s.clone());
            }
        }
    }
    let collected: Vec<PauliString> = strings.into_iter().collect();
    Ok(group_qubit_wise(&collected).len() as u64)
}

/// Largest group count among the individual anticommutator expansions
/// {H, O} over the set; size-independent for the chain sets.
pub fn anticommutator_expansion_max_groups(h: &PauliSum, set: &OperatorSet) -> Result<u64> {
    let mut max_groups = 0u64;
    for member in &set.members {
        let expansion = anticommutator_with_sum(h, member)?;
        let strings: Vec<PauliString> = expansion
            .terms()
            .filter(|(s, _)| !s.is_identity())
            .map(|(s, _)| s.clone())
            .collect();
        max_groups = max_groups.max(group_qubit_wise(&strings).len() as u64);
    }
    Ok(max_groups)
}

fn hamiltonian_strings(h: &PauliSum) -> Vec<PauliString> {
    h.terms()
        .filter(|(s, _)| !s.is_identity())
        .map(|(s, _)| s.clone())
        .collect()
}

/// Static per-step circuit counts for either algorithm.
///
/// Metric-tensor counting is 4 circuits for every parameter pair i <= j;
/// parameter-shift phases count two evaluation points per parameter times
/// the number of circuits per point.
pub fn count_circuits(
    algorithm: Algorithm,
    h: &PauliSum,
    set: Option<&OperatorSet>,
    ansatz: &HeaAnsatz,
    strategy: MeasurementStrategy,
) -> Result<StepCircuitCounts> {
    let n_params = ansatz.num_parameters() as u64;
    let h_strings = hamiltonian_strings(h);
    let h_circuits = match strategy {
        MeasurementStrategy::Naive => h_strings.len() as u64,
        MeasurementStrategy::Grouped => group_qubit_wise(&h_strings).len() as u64,
    };
    match algorithm {
        Algorithm::Vqite => {
            let pairs = n_params * (n_params + 1) / 2;
            Ok(StepCircuitCounts {
                entries: vec![
                    (CostPhase::MetricTensor, 4 * pairs),
                    (CostPhase::EnergyGradient, 2 * n_params * h_circuits),
                    (CostPhase::Energy, h_circuits),
                ],
            })
        }
        Algorithm::Ovqite => {
            let set = set.ok_or_else(|| {
                Error::Validation("operator-projected counting needs an operator set".into())
            })?;
            if set.is_empty() {
                return Err(Error::Validation("operator set is empty".into()));
            }
            let set_circuits = match strategy {
                MeasurementStrategy::Naive => set.len() as u64,
                MeasurementStrategy::Grouped => group_qubit_wise(&set.members).len() as u64,
            };
            let target_circuits = match strategy {
                MeasurementStrategy::Naive => target_vector_naive_count(h, set)?,
                MeasurementStrategy::Grouped => {
                    let strings = target_vector_strings(h, set)?;
                    group_qubit_wise(&strings).len() as u64
                }
            };
            Ok(StepCircuitCounts {
                entries: vec![
                    (CostPhase::DerivativeMatrix, 2 * n_params * set_circuits),
                    (CostPhase::TargetVector, target_circuits),
                ],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfim::{build_tfim, operator_set, SetName, TfimParams};

    fn s(text: &str) -> PauliString {
        text.parse().unwrap()
    }

    #[test]
    fn greedy_grouping_worked_example() {
        let groups = group_qubit_wise(&[s("XX"), s("ZZ"), s("XI")]);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].members, vec![s("XX"), s("XI")]);
        assert_eq!(groups[1].members, vec![s("ZZ")]);
    }

    #[test]
    fn tfim_hamiltonian_groups_into_two() {
        for n in [3, 5, 8] {
            let h = build_tfim(&TfimParams::new(n, 1.0, 0.5)).unwrap();
            let strings: Vec<PauliString> = h.terms().map(|(p, _)| p.clone()).collect();
            assert_eq!(group_qubit_wise(&strings).len(), 2);
        }
    }

    #[test]
    fn groups_are_internally_commuting() {
        let p = TfimParams::new(6, 1.0, 0.5);
        let set = operator_set(&p, SetName::SIM).unwrap();
        for group in group_qubit_wise(&set.members) {
            for a in &group.members {
                for b in &group.members {
                    assert!(a.qubit_wise_commutes(b).unwrap());
                }
            }
            // Basis letter matches the unique non-identity letter per qubit.
            for member in &group.members {
                for (q, &l) in member.letters().iter().enumerate() {
                    if !l.is_identity() {
                        assert_eq!(group.basis[q], l);
                    }
                }
            }
        }
    }

    #[test]
    fn rotation_gates_per_basis() {
        let group = MeasurementGroup {
            members: vec![s("XI")],
            basis: vec![PauliOp::X, PauliOp::I],
        };
        assert_eq!(basis_rotation(&group), vec![Gate::H { target: 0 }]);

        let group = MeasurementGroup {
            members: vec![s("IY")],
            basis: vec![PauliOp::I, PauliOp::Y],
        };
        assert_eq!(
            basis_rotation(&group),
            vec![Gate::Sdg { target: 1 }, Gate::H { target: 1 }]
        );

        let group = MeasurementGroup {
            members: vec![s("ZZ")],
            basis: vec![PauliOp::Z, PauliOp::Z],
        };
        assert!(basis_rotation(&group).is_empty());
    }

    #[test]
    fn exact_reconstruction_matches_direct_expectation() {
        // Entangled-ish state from a couple of gates.
        let mut state = StateVector::zero_state(2);
        state
            .apply_gates(&[
                Gate::Ry { target: 0, angle: 0.7 },
                Gate::Cnot { control: 0, target: 1 },
                Gate::Ry { target: 1, angle: -0.4 },
            ])
            .unwrap();
        let strings = [s("XX"), s("XI"), s("ZZ"), s("YY"), s("ZI")];
        for group in group_qubit_wise(&strings) {
            let values = group_expectations_exact(&state, &group).unwrap();
            for (member, value) in group.members.iter().zip(values) {
                let direct = state.expectation(member).unwrap();
                assert!(
                    (value - direct).abs() < 1e-12,
                    "{member}: {value} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn shot_estimate_hits_binomial_band() {
        let theta = 0.9_f64;
        let mut state = StateVector::zero_state(1);
        state.apply_gate(&Gate::Ry { target: 0, angle: theta }).unwrap();
        let group = MeasurementGroup {
            members: vec![s("X")],
            basis: vec![PauliOp::X],
        };
        let shots = 100_000u64;
        let mut rng = derive_stream(11, 0, 0, 0);
        let est = estimate_group(&state, &group, shots, &mut rng).unwrap();
        let value = est[&s("X")];
        let exact = theta.sin();
        let sigma = ((1.0 - exact * exact) / shots as f64).sqrt();
        assert!((value - exact).abs() < 3.0 * sigma, "{value} vs {exact}");
    }

    #[test]
    fn ledger_identity_uniform_shots() {
        let mut ledger = CostLedger::new();
        ledger.credit(CostPhase::DerivativeMatrix, 7, 100);
        ledger.credit(CostPhase::TargetVector, 3, 100);
        assert_eq!(ledger.circuits_total(), 10);
        assert_eq!(ledger.measurements(), 10 * 100);
    }

    #[test]
    fn derive_stream_is_stable_and_distinct() {
        use rand::RngCore;
        let mut a = derive_stream(1, 2, 3, 4);
        let mut b = derive_stream(1, 2, 3, 4);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = derive_stream(1, 2, 3, 5);
        let mut d = derive_stream(1, 2, 3, 4);
        assert_ne!(c.next_u64(), d.next_u64());
    }

    #[test]
    fn group_counts_are_size_independent() {
        let mut sim_counts = Vec::new();
        let mut sh_counts = Vec::new();
        for n in [4usize, 6, 8, 10] {
            let p = TfimParams::new(n, 1.0, 0.5);
            let sim = operator_set(&p, SetName::SIM).unwrap();
            sim_counts.push(group_qubit_wise(&sim.members).len());
            let sh = operator_set(&p, SetName::SH).unwrap();
            sh_counts.push(group_qubit_wise(&sh.members).len());
        }
        assert!(sim_counts.windows(2).all(|w| w[0] == w[1]), "{sim_counts:?}");
        assert!(sh_counts.iter().all(|&c| c == 2), "{sh_counts:?}");
    }
}
