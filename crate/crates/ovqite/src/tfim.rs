//! Transverse-field Ising chain: Hamiltonian construction, the observable
//! sets used by the operator-projected evolution, and the dense ground-state
//! oracle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dense;
use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString, PauliSum};

/// Largest qubit count accepted by the dense diagonalization oracle.
pub const DENSE_DIAG_MAX_QUBITS: usize = 14;

/// Chain parameters: H = -J sum_i Z_i Z_{i+1} - h sum_i X_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfimParams {
    /// Number of sites (= qubits).
    pub n: usize,
    /// Ising coupling J > 0.
    pub j: f64,
    /// Transverse field strength.
    pub h: f64,
    /// Periodic boundary (bond between sites n-1 and 0).
    pub periodic: bool,
}

impl TfimParams {
    pub fn new(n: usize, j: f64, h: f64) -> Self {
        TfimParams { n, j, h, periodic: true }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Validation(format!("TFIM needs n >= 2, got {}", self.n)));
        }
        if self.j <= 0.0 {
            return Err(Error::Validation(format!("TFIM needs J > 0, got {}", self.j)));
        }
        Ok(())
    }

    /// Field-to-coupling ratio h/J.
    pub fn field_ratio(&self) -> f64 {
        self.h / self.j
    }
}

/// Named observable set for the operator-projected evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetName {
    /// The Hamiltonian's own Pauli strings, |S_H| = 2n.
    SH,
    /// All 1-local and nearest-neighbor 2-local strings, |S_NN| = 12n.
    SNN,
    /// S_NN without the odd-Y strings that vanish on real circuits, |S_IM| = 7n.
    SIM,
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetName::SH => "S_H",
            SetName::SNN => "S_NN",
            SetName::SIM => "S_IM",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S_H" | "SH" => Ok(SetName::SH),
            "S_NN" | "SNN" => Ok(SetName::SNN),
            "S_IM" | "SIM" => Ok(SetName::SIM),
            other => Err(Error::Validation(format!("unknown operator set '{other}'"))),
        }
    }
}

/// A list of distinct phase-canonical Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub name: String,
    pub members: Vec<PauliString>,
}

impl OperatorSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// CSV form, one `set,string` row per member.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,string\n");
        for m in &self.members {
            out.push_str(&format!("{},{m}\n", self.name));
        }
        out
    }
}

/// Builds the TFIM Hamiltonian. Periodic chains at n = 2 produce the bond
/// Z_0 Z_1 twice; duplicates merge, giving that bond coefficient -2J.
pub fn build_tfim(p: &TfimParams) -> Result<PauliSum> {
    p.validate()?;
    let mut h = PauliSum::new(p.n);
    let bonds = if p.periodic { p.n } else { p.n - 1 };
    for i in 0..bonds {
        let string = PauliString::from_ops(
            p.n,
            &[(i, PauliOp::Z), ((i + 1) % p.n, PauliOp::Z)],
        )?;
        h.add_term(&string, Complex64::new(-p.j, 0.0))?;
    }
    for i in 0..p.n {
        let string = PauliString::single(p.n, i, PauliOp::X)?;
        h.add_term(&string, Complex64::new(-p.h, 0.0))?;
    }
    Ok(h)
}

/// Ordered site pairs (j, k) over nearest-neighbor bonds; both orientations.
fn ordered_neighbor_pairs(p: &TfimParams) -> Vec<(usize, usize)> {
    let bonds = if p.periodic { p.n } else { p.n - 1 };
    let mut pairs = Vec::with_capacity(2 * bonds);
    for i in 0..bonds {
        let k = (i + 1) % p.n;
        pairs.push((i, k));
        pairs.push((k, i));
    }
    pairs
}

/// Builds one of the named observable sets for the chain.
///
/// S_NN collects every single-site Pauli and every two-site string over
/// nearest-neighbor pairs; S_IM drops the strings with an odd number of Y
/// letters (Y_j alone and the ordered pairs Y_j X_k, Y_j Z_k), which have
/// identically zero expectation on real-amplitude circuits.
pub fn operator_set(p: &TfimParams, name: SetName) -> Result<OperatorSet> {
    p.validate()?;
    let members = match name {
        SetName::SH => build_tfim(p)?.terms().map(|(s, _)| s.clone()).collect(),
        SetName::SNN | SetName::SIM => {
            let keep_imaginary = name == SetName::SNN;
            let mut members: Vec<PauliString> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            let mut push = |s: PauliString, members: &mut Vec<PauliString>| {
                if seen.insert(s.clone()) {
                    members.push(s);
                }
            };
            for q in 0..p.n {
                for op in [PauliOp::X, PauliOp::Y, PauliOp::Z] {
                    if !keep_imaginary && op == PauliOp::Y {
                        continue;
                    }
                    push(PauliString::single(p.n, q, op)?, &mut members);
                }
            }
            for (j, k) in ordered_neighbor_pairs(p) {
                for first in [PauliOp::X, PauliOp::Y, PauliOp::Z] {
                    for second in [PauliOp::X, PauliOp::Y, PauliOp::Z] {
                        if !keep_imaginary && (first == PauliOp::Y) != (second == PauliOp::Y) {
                            continue;
                        }
                        push(
                            PauliString::from_ops(p.n, &[(j, first), (k, second)])?,
                            &mut members,
                        );
                    }
                }
            }
            members
        }
    };
    Ok(OperatorSet {
        name: name.to_string(),
        members,
    })
}

/// Every non-identity Pauli string on n qubits, for probing the
/// full-projection limit at toy sizes.
pub fn full_pauli_basis(n: usize) -> Result<OperatorSet> {
    if n > 3 {
        return Err(Error::Capability(format!(
            "full Pauli basis limited to n <= 3, got {n}"
        )));
    }
    let ops = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let mut members = Vec::with_capacity(4usize.pow(n as u32) - 1);
    for code in 1..4usize.pow(n as u32) {
        let mut c = code;
        let mut letters = Vec::with_capacity(n);
        for _ in 0..n {
            letters.push(ops[c % 4]);
            c /= 4;
        }
        members.push(PauliString::from_letters(letters));
    }
    Ok(OperatorSet {
        name: "full_basis".into(),
        members,
    })
}

/// Ground-state energy by dense diagonalization (n <= 14).
pub fn exact_ground_energy(h: &PauliSum) -> Result<f64> {
    dense::smallest_eigenvalue(h, DENSE_DIAG_MAX_QUBITS)
}
