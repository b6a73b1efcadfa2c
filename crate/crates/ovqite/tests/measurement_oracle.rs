//! Grouped measurement reconstruction against the dense oracle, rotation
//! correctness and circuit counting.

mod common;

use common::*;
use ovqite::{
    anticommutator_naive_count, basis_rotation, count_circuits, group_expectations_exact,
    group_qubit_wise, operator_set, Algorithm, HeaAnsatz, MeasurementGroup, MeasurementStrategy,
    PauliOp, SetName, TfimParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn rotation_diagonalizes_members() {
    // V P V^dag is diagonal with the support-sign diagonal for every member,
    // checked densely on two qubits.
    let strings: Vec<ovqite::PauliString> = vec![
        "XX".parse().unwrap(),
        "XI".parse().unwrap(),
        "ZZ".parse().unwrap(),
        "YY".parse().unwrap(),
        "IY".parse().unwrap(),
        "ZI".parse().unwrap(),
    ];
    for group in group_qubit_wise(&strings) {
        // Dense matrix of the rotation circuit.
        let mut v = vec![vec![num_complex::Complex64::new(0.0, 0.0); 4]; 4];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = num_complex::Complex64::new(1.0, 0.0);
        }
        for gate in basis_rotation(&group) {
            let local = match gate {
                ovqite::Gate::H { .. } => {
                    let h = 1.0 / 2.0_f64.sqrt();
                    vec![
                        vec![num_complex::Complex64::new(h, 0.0), num_complex::Complex64::new(h, 0.0)],
                        vec![num_complex::Complex64::new(h, 0.0), num_complex::Complex64::new(-h, 0.0)],
                    ]
                }
                ovqite::Gate::Sdg { .. } => vec![
                    vec![num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(0.0, 0.0)],
                    vec![num_complex::Complex64::new(0.0, 0.0), num_complex::Complex64::new(0.0, -1.0)],
                ],
                other => panic!("unexpected rotation gate {other:?}"),
            };
            let target = match gate {
                ovqite::Gate::H { target } | ovqite::Gate::Sdg { target } => target,
                _ => unreachable!(),
            };
            let eye = letter_matrix(PauliOp::I);
            let full = if target == 0 { kron(&eye, &local) } else { kron(&local, &eye) };
            v = matmul(&full, &v);
        }
        let v_dag: CMat = (0..4)
            .map(|i| (0..4).map(|j| v[j][i].conj()).collect())
            .collect();
        for member in &group.members {
            let rotated = matmul(&v, &matmul(&string_matrix(member), &v_dag));
            let mask = member.support_mask() as usize;
            for (i, row) in rotated.iter().enumerate() {
                for (j, entry) in row.iter().enumerate() {
                    if i == j {
                        let sign = if (i & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                        assert!((entry.re - sign).abs() < 1e-12, "{member} diag {i}");
                        assert!(entry.im.abs() < 1e-12);
                    } else {
                        assert!(entry.norm() < 1e-12, "{member} off-diag ({i},{j})");
                    }
                }
            }
        }
    }
}

#[test]
fn infinite_shot_reconstruction_equals_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for n in 1..=4usize {
        for _ in 0..10 {
            let state = random_state(n, &mut rng);
            let strings: Vec<ovqite::PauliString> = (0..6)
                .map(|_| random_string(n, &mut rng))
                .filter(|s| !s.is_identity())
                .collect();
            for group in group_qubit_wise(&strings) {
                let values = group_expectations_exact(&state, &group).unwrap();
                for (member, value) in group.members.iter().zip(values) {
                    let direct = state.expectation(member).unwrap();
                    assert!(
                        (value - direct).abs() < 1e-12,
                        "n={n} {member}: {value} vs {direct}"
                    );
                }
            }
        }
    }
}

#[test]
fn group_union_covers_input() {
    let p = TfimParams::new(8, 1.0, 0.5);
    let set = operator_set(&p, SetName::SIM).unwrap();
    let groups = group_qubit_wise(&set.members);
    let total: usize = groups.iter().map(|g| g.members.len()).sum();
    assert_eq!(total, set.len());
    let mut seen = std::collections::HashSet::new();
    for g in &groups {
        for m in &g.members {
            seen.insert(m.clone());
        }
    }
    assert_eq!(seen.len(), set.len());
}

#[test]
fn eigenvalue_product_cases() {
    // |index 1> = qubit0 in |1>, qubit1 in |0>: Z0 Z1 -> (-1)(+1) = -1.
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 4];
    amps[1] = num_complex::Complex64::new(1.0, 0.0);
    let state = ovqite::StateVector::from_amplitudes(amps).unwrap();
    let group = MeasurementGroup {
        members: vec!["ZZ".parse().unwrap()],
        basis: vec![PauliOp::Z, PauliOp::Z],
    };
    let values = group_expectations_exact(&state, &group).unwrap();
    assert!((values[0] + 1.0).abs() < 1e-14);

    // |+>|+>: X0 X1 -> +1.
    let mut plus = ovqite::StateVector::zero_state(2);
    plus.apply_gate(&ovqite::Gate::H { target: 0 }).unwrap();
    plus.apply_gate(&ovqite::Gate::H { target: 1 }).unwrap();
    let group = MeasurementGroup {
        members: vec!["XX".parse().unwrap()],
        basis: vec![PauliOp::X, PauliOp::X],
    };
    let values = group_expectations_exact(&plus, &group).unwrap();
    assert!((values[0] - 1.0).abs() < 1e-14);
}

#[test]
fn naive_anticommutator_counts_grow_quadratically() {
    // Least-squares fit of count against n^2 over n in 4..=12.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in (4..=12).step_by(2) {
        let p = TfimParams::new(n, 1.0, 0.5);
        let h = ovqite::build_tfim(&p).unwrap();
        let set = operator_set(&p, SetName::SIM).unwrap();
        xs.push((n * n) as f64);
        ys.push(anticommutator_naive_count(&h, &set).unwrap() as f64);
    }
    let r2 = linear_fit_r2(&xs, &ys);
    assert!(r2 >= 0.99, "R^2 = {r2}");
}

fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn vqite_circuit_counts_follow_formulas() {
    let p = TfimParams::new(10, 1.0, 0.5);
    let h = ovqite::build_tfim(&p).unwrap();
    let ansatz = HeaAnsatz::new(10, 5);
    let counts = count_circuits(Algorithm::Vqite, &h, None, &ansatz, MeasurementStrategy::Grouped)
        .unwrap();
    let np = ansatz.num_parameters() as u64;
    assert_eq!(counts.phase(ovqite::CostPhase::MetricTensor), 4 * np * (np + 1) / 2);
    // C_H = 2 for the chain Hamiltonian.
    assert_eq!(counts.phase(ovqite::CostPhase::EnergyGradient), 2 * np * 2);
    assert_eq!(counts.phase(ovqite::CostPhase::Energy), 2);

    let naive = count_circuits(Algorithm::Vqite, &h, None, &ansatz, MeasurementStrategy::Naive)
        .unwrap();
    assert_eq!(naive.phase(ovqite::CostPhase::EnergyGradient), 2 * np * 20);
}

#[test]
fn ovqite_circuit_counts_follow_formulas() {
    let p = TfimParams::new(10, 1.0, 0.5);
    let h = ovqite::build_tfim(&p).unwrap();
    let ansatz = HeaAnsatz::new(10, 5);
    let set = operator_set(&p, SetName::SH).unwrap();
    let counts = count_circuits(
        Algorithm::Ovqite,
        &h,
        Some(&set),
        &ansatz,
        MeasurementStrategy::Grouped,
    )
    .unwrap();
    let np = ansatz.num_parameters() as u64;
    // S_H groups into the all-Z and all-X bases: M phase is 2 N_theta * 2.
    assert_eq!(counts.phase(ovqite::CostPhase::DerivativeMatrix), 2 * np * 2);
    assert!(counts.phase(ovqite::CostPhase::TargetVector) > 0);

    let naive = count_circuits(
        Algorithm::Ovqite,
        &h,
        Some(&set),
        &ansatz,
        MeasurementStrategy::Naive,
    )
    .unwrap();
    assert_eq!(naive.phase(ovqite::CostPhase::DerivativeMatrix), 2 * np * set.len() as u64);
    assert_eq!(
        naive.phase(ovqite::CostPhase::TargetVector),
        ovqite::target_vector_naive_count(&h, &set).unwrap()
    );
}

#[test]
fn grouped_counts_constant_across_sizes() {
    // Group counts for the sets and for each individual Hamiltonian
    // anticommutator expansion are independent of n over 4..=12. The
    // deduplicated union across all expansions necessarily grows (its
    // strings demand bases separating every site-bond pair), but stays far
    // below the naive per-string count.
    for name in [SetName::SH, SetName::SIM] {
        let mut set_counts = Vec::new();
        let mut expansion_counts = Vec::new();
        let mut union_counts = Vec::new();
        for n in (4..=12).step_by(2) {
            let p = TfimParams::new(n, 1.0, 0.5);
            let h = ovqite::build_tfim(&p).unwrap();
            let set = operator_set(&p, name).unwrap();
            set_counts.push(group_qubit_wise(&set.members).len());
            expansion_counts
                .push(ovqite::anticommutator_expansion_max_groups(&h, &set).unwrap());
            union_counts.push((n, ovqite::anticommutator_grouped_count(&h, &set).unwrap()));
        }
        assert!(
            set_counts.windows(2).all(|w| w[0] == w[1]),
            "{name:?} set: {set_counts:?}"
        );
        assert!(
            expansion_counts.windows(2).all(|w| w[0] == w[1]),
            "{name:?} expansions: {expansion_counts:?}"
        );
        for &(n, union) in &union_counts {
            let naive = {
                let p = TfimParams::new(n, 1.0, 0.5);
                let h = ovqite::build_tfim(&p).unwrap();
                let set = operator_set(&p, name).unwrap();
                anticommutator_naive_count(&h, &set).unwrap()
            };
            assert!(union * 4 < naive, "{name:?} n={n}: union {union} vs naive {naive}");
        }
    }
}
