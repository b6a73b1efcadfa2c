//! Phase-exact algebra of n-qubit Pauli strings and weighted Pauli sums.
//!
//! A [`PauliString`] is a tensor product of single-qubit Pauli operators
//! together with a unit phase from {+1, +i, -1, -i}. A [`PauliSum`] is a
//! linear combination of phase-canonical strings with complex coefficients,
//! merged on insertion so that no duplicate or zero terms survive.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this threshold count as zero.
pub const COEFF_PRUNE_THRESHOLD: f64 = 1e-14;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    /// Letter representation used in text serialization.
    pub fn letter(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    /// Parse a single letter; accepts upper case only.
    pub fn from_letter(c: char) -> Result<Self> {
        match c {
            'I' => Ok(PauliOp::I),
            'X' => Ok(PauliOp::X),
            'Y' => Ok(PauliOp::Y),
            'Z' => Ok(PauliOp::Z),
            other => Err(Error::Validation(format!("unknown Pauli letter '{other}'"))),
        }
    }

    pub fn is_identity(self) -> bool {
        self == PauliOp::I
    }

    /// Single-qubit product `self * rhs` as (letter, power of i).
    fn mul(self, rhs: Self) -> (Self, u8) {
        use PauliOp::*;
        match (self, rhs) {
            (I, b) => (b, 0),
            (a, I) => (a, 0),
            (a, b) if a == b => (I, 0),
            (X, Y) => (Z, 1),
            (Y, X) => (Z, 3),
            (Y, Z) => (X, 1),
            (Z, Y) => (X, 3),
            (Z, X) => (Y, 1),
            (X, Z) => (Y, 3),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Unit phase i^k with k in {0,1,2,3}, i.e. one of {+1, +i, -1, -i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// Phase from a power of i.
    pub fn from_exponent(k: u8) -> Phase {
        Phase(k % 4)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn times(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    /// True for +1 and -1 (the Hermitian phases).
    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn as_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        };
        write!(f, "{s}")
    }
}

/// Tensor product of Pauli operators with an explicit unit phase.
///
/// Letters are stored per qubit, index 0 first; the text form `"ZZI"` puts
/// qubit 0 leftmost. Canonical observables carry phase +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<PauliOp>,
}

impl PauliString {
    /// Identity string on `n` qubits with phase +1.
    pub fn identity(n: usize) -> Self {
        PauliString {
            phase: Phase::PLUS_ONE,
            letters: vec![PauliOp::I; n],
        }
    }

    /// String from explicit letters, phase +1.
    pub fn from_letters(letters: Vec<PauliOp>) -> Self {
        PauliString {
            phase: Phase::PLUS_ONE,
            letters,
        }
    }

    /// String with the given phase.
    pub fn with_phase(letters: Vec<PauliOp>, phase: Phase) -> Self {
        PauliString { phase, letters }
    }

    /// Single-site operator on `n` qubits.
    pub fn single(n: usize, qubit: usize, op: PauliOp) -> Result<Self> {
        if qubit >= n {
            return Err(Error::Dimension(format!(
                "qubit {qubit} out of range for n={n}"
            )));
        }
        let mut letters = vec![PauliOp::I; n];
        letters[qubit] = op;
        Ok(PauliString::from_letters(letters))
    }

    /// Operator with letters placed at the given sites, identity elsewhere.
    pub fn from_ops(n: usize, ops: &[(usize, PauliOp)]) -> Result<Self> {
        let mut letters = vec![PauliOp::I; n];
        for &(qubit, op) in ops {
            if qubit >= n {
                return Err(Error::Dimension(format!(
                    "qubit {qubit} out of range for n={n}"
                )));
            }
            letters[qubit] = op;
        }
        Ok(PauliString::from_letters(letters))
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[PauliOp] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> PauliOp {
        self.letters[qubit]
    }

    /// True when every letter is the identity (any phase).
    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|l| l.is_identity())
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|l| !l.is_identity()).count()
    }

    /// Bit mask of qubits where the letter flips basis states (X or Y).
    pub fn x_mask(&self) -> u64 {
        self.mask(|l| matches!(l, PauliOp::X | PauliOp::Y))
    }

    /// Bit mask of qubits contributing a (-1)^bit sign (Z or Y).
    pub fn zy_mask(&self) -> u64 {
        self.mask(|l| matches!(l, PauliOp::Z | PauliOp::Y))
    }

    /// Bit mask of non-identity qubits.
    pub fn support_mask(&self) -> u64 {
        self.mask(|l| !l.is_identity())
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> u32 {
        self.letters
            .iter()
            .filter(|l| matches!(l, PauliOp::Y))
            .count() as u32
    }

    fn mask(&self, pred: impl Fn(PauliOp) -> bool) -> u64 {
        assert!(self.n() <= 64, "bit masks support at most 64 qubits");
        let mut m = 0u64;
        for (q, &l) in self.letters.iter().enumerate() {
            if pred(l) {
                m |= 1 << q;
            }
        }
        m
    }

    /// The same string with phase +1, together with the stripped phase.
    pub fn canonical(&self) -> (PauliString, Phase) {
        (
            PauliString::from_letters(self.letters.clone()),
            self.phase,
        )
    }

    fn check_same_n(&self, other: &PauliString) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::Dimension(format!(
                "Pauli strings act on {} and {} qubits",
                self.n(),
                other.n()
            )));
        }
        Ok(())
    }

    /// Operator product `self * rhs` with the accumulated phase.
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        self.check_same_n(rhs)?;
        let mut exponent = self.phase.exponent() + rhs.phase.exponent();
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (l, k) = a.mul(b);
                exponent += k;
                l
            })
            .collect();
        Ok(PauliString::with_phase(
            letters,
            Phase::from_exponent(exponent % 4),
        ))
    }

    /// Global commutation: true iff the number of positions where both
    /// letters are non-identity and differ is even.
    pub fn commutes(&self, rhs: &PauliString) -> Result<bool> {
        self.check_same_n(rhs)?;
        let clashes = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .filter(|(&a, &b)| !a.is_identity() && !b.is_identity() && a != b)
            .count();
        Ok(clashes % 2 == 0)
    }

    /// Qubit-wise commutation: at every position the letters are equal or at
    /// least one is the identity. Implies global commutation.
    pub fn qubit_wise_commutes(&self, rhs: &PauliString) -> Result<bool> {
        self.check_same_n(rhs)?;
        Ok(self
            .letters
            .iter()
            .zip(&rhs.letters)
            .all(|(&a, &b)| a == b || a.is_identity() || b.is_identity()))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase != Phase::PLUS_ONE {
            write!(f, "{}*", self.phase)?;
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses the plain letter form, e.g. `"ZZIII"`; qubit 0 is leftmost.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s.chars().map(PauliOp::from_letter).collect::<Result<_>>()?;
        Ok(PauliString::from_letters(letters))
    }
}

/// Weighted sum of phase-canonical Pauli strings.
///
/// Duplicate strings merge by coefficient addition on insertion and terms
/// whose coefficient magnitude falls to [`COEFF_PRUNE_THRESHOLD`] or below
/// are removed. Iteration order is the (deterministic) insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: IndexMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        PauliSum {
            n,
            terms: IndexMap::new(),
        }
    }

    /// Builds a sum from (string, coefficient) pairs, merging duplicates.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut sum = PauliSum::new(n);
        for (string, coeff) in terms {
            sum.add_term(&string, coeff)?;
        }
        Ok(sum)
    }

    /// Adds `coeff * string`, folding the string's phase into the coefficient.
    pub fn add_term(&mut self, string: &PauliString, coeff: Complex64) -> Result<()> {
        if string.n() != self.n {
            return Err(Error::Dimension(format!(
                "term acts on {} qubits, sum on {}",
                string.n(),
                self.n
            )));
        }
        let (canonical, phase) = string.canonical();
        let folded = coeff * phase.as_complex();
        let entry = self.terms.entry(canonical).or_insert(Complex64::new(0.0, 0.0));
        *entry += folded;
        if entry.norm() <= COEFF_PRUNE_THRESHOLD {
            let key = string.canonical().0;
            self.terms.shift_remove(&key);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct stored strings.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in insertion order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, Complex64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    /// Coefficient of a canonical (phase +1) string, zero if absent.
    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms
            .get(string)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// True when all coefficients are real to within `tol` (keys are
    /// canonical, so this is exactly Hermiticity of the sum).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// CSV form, one `string,re,im` row per term in insertion order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("string,coeff_re,coeff_im\n");
        for (p, c) in self.terms() {
            out.push_str(&format!("{p},{},{}\n", c.re, c.im));
        }
        out
    }
}

/// Anticommutator of a Pauli sum with a single canonical string:
/// {H, O} = sum over terms of H commuting with O of 2 c_a (P_a O).
///
/// Anticommuting terms vanish; product phases fold into the coefficients, so
/// the result is again a sum over canonical strings.
pub fn anticommutator_with_sum(h: &PauliSum, o: &PauliString) -> Result<PauliSum> {
    if h.n() != o.n() {
        return Err(Error::Dimension(format!(
            "sum acts on {} qubits, string on {}",
            h.n(),
            o.n()
        )));
    }
    if o.phase() != Phase::PLUS_ONE {
        return Err(Error::Validation(
            "anticommutator expects a phase +1 operator".into(),
        ));
    }
    let mut out = PauliSum::new(h.n());
    for (p, c) in h.terms() {
        if p.commutes(o)? {
            let product = p.multiply(o)?;
            out.add_term(&product, 2.0 * c)?;
        }
    }
    Ok(out)
}
