//! Pauli-basis expansion of Hermitian matrices and qubit-wise-commuting
//! measurement grouping.
//!
//! A 2ⁿ×2ⁿ Hermitian matrix expands uniquely as H = Σ_j h_j σ_j over the 4ⁿ
//! Pauli strings, with real h_j = Tr(σ_j H)/2ⁿ. Strings that agree letter-wise
//! up to the identity share a measurement basis; grouping them cuts the number
//! of circuit evaluations per expectation value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matrix::{C64, CMatrix, HermitianMatrix};

/// Single-qubit Pauli letter. The derived ordering (I < X < Y < Z) pins the
/// deterministic term ordering used by the grouping heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let mut m = CMatrix::zeros(2);
        match self {
            Pauli::I => {
                m[(0, 0)] = C64::new(1.0, 0.0);
                m[(1, 1)] = C64::new(1.0, 0.0);
            }
            Pauli::X => {
                m[(0, 1)] = C64::new(1.0, 0.0);
                m[(1, 0)] = C64::new(1.0, 0.0);
            }
            Pauli::Y => {
                m[(0, 1)] = C64::new(0.0, -1.0);
                m[(1, 0)] = C64::new(0.0, 1.0);
            }
            Pauli::Z => {
                m[(0, 0)] = C64::new(1.0, 0.0);
                m[(1, 1)] = C64::new(-1.0, 0.0);
            }
        }
        m
    }
}

/// Tensor product of Pauli letters; letter 0 acts on wire 0, the most
/// significant bit of basis indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self(vec![Pauli::I; n_qubits])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// True iff at every position the letters are equal or at least one is I.
    ///
    /// Panics on length mismatch; comparing strings from different qubit
    /// counts is a caller bug.
    pub fn qwc_compatible(&self, other: &PauliString) -> bool {
        assert_eq!(
            self.len(),
            other.len(),
            "qwc_compatible: length mismatch {} vs {}",
            self.len(),
            other.len()
        );
        self.0
            .iter()
            .zip(other.0.iter())
            .all(|(&a, &b)| a == Pauli::I || b == Pauli::I || a == b)
    }

    /// Row-sparse action: for row index `row` returns (column, phase) of the
    /// single nonzero entry σ[row][column].
    pub(crate) fn row_action(&self, row: usize) -> (usize, C64) {
        let n = self.0.len();
        let mut col = row;
        let mut phase = C64::new(1.0, 0.0);
        for (q, &p) in self.0.iter().enumerate() {
            let bit_pos = n - 1 - q;
            let bit = (row >> bit_pos) & 1;
            match p {
                Pauli::I => {}
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                Pauli::X => {
                    col ^= 1 << bit_pos;
                }
                Pauli::Y => {
                    col ^= 1 << bit_pos;
                    phase *= if bit == 0 {
                        C64::new(0.0, -1.0)
                    } else {
                        C64::new(0.0, 1.0)
                    };
                }
            }
        }
        (col, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            match Pauli::from_char(c) {
                Some(p) => letters.push(p),
                None => return Err(format!("invalid Pauli letter {c:?} in {s:?}")),
            }
        }
        if letters.is_empty() {
            return Err("empty Pauli string".into());
        }
        Ok(PauliString(letters))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PauliError {
    #[error("matrix dimension {0} is not a power of two")]
    DimNotPowerOfTwo(usize),
    #[error("term {index}: string length {len} does not match {n_qubits} qubits")]
    LengthMismatch {
        index: usize,
        len: usize,
        n_qubits: usize,
    },
    #[error("duplicate Pauli string {0}")]
    DuplicateString(String),
    #[error("term {index}: coefficient is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("{0}")]
    Parse(String),
    #[error("n_qubits {0} exceeds the supported maximum of {max}", max = MAX_QUBITS)]
    TooManyQubits(usize),
}

/// File-format cap: dense reconstruction of anything larger is pointless here.
pub const MAX_QUBITS: usize = 12;

/// Weighted sum of Pauli strings with real coefficients (eV).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<(PauliString, f64)>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<(PauliString, f64)>) -> Result<Self, PauliError> {
        if n_qubits > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        let mut seen = std::collections::HashSet::new();
        for (index, (s, c)) in terms.iter().enumerate() {
            if s.len() != n_qubits {
                return Err(PauliError::LengthMismatch {
                    index,
                    len: s.len(),
                    n_qubits,
                });
            }
            if !c.is_finite() {
                return Err(PauliError::NonFiniteCoefficient { index });
            }
            if !seen.insert(s.clone()) {
                return Err(PauliError::DuplicateString(s.to_string()));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    /// The all-I string on `n_qubits` with unit coefficient.
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: vec![(PauliString::identity(n_qubits), 1.0)],
        }
    }

    /// Dense matrix Σ h_j σ_j, assembled from the sparse row action of each
    /// string.
    pub fn to_matrix(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim);
        for (string, coeff) in &self.terms {
            for row in 0..dim {
                let (col, phase) = string.row_action(row);
                m[(row, col)] += phase * *coeff;
            }
        }
        m
    }
}

/// Expands a Hermitian matrix over the Pauli basis.
///
/// Coefficients are h_j = Tr(σ_j H)/2ⁿ; terms with |h_j| < `prune_tol` are
/// omitted. With `prune_tol = 0` all 4ⁿ strings are kept and the expansion
/// reconstructs H exactly (to rounding). Terms come out in lexicographic
/// string order (I < X < Y < Z).
pub fn decompose(h: &HermitianMatrix, prune_tol: f64) -> Result<PauliHamiltonian, PauliError> {
    let dim = h.dim();
    if !dim.is_power_of_two() {
        return Err(PauliError::DimNotPowerOfTwo(dim));
    }
    let n_qubits = dim.trailing_zeros() as usize;
    if n_qubits > MAX_QUBITS {
        return Err(PauliError::TooManyQubits(n_qubits));
    }
    let m = h.matrix();

    let mut terms = Vec::new();
    let n_strings = 1usize << (2 * n_qubits);
    for code in 0..n_strings {
        // Base-4 digits, most significant digit on wire 0, yield lexicographic
        // enumeration.
        let mut letters = vec![Pauli::I; n_qubits];
        for (q, letter) in letters.iter_mut().enumerate() {
            let digit = (code >> (2 * (n_qubits - 1 - q))) & 0b11;
            *letter = match digit {
                0 => Pauli::I,
                1 => Pauli::X,
                2 => Pauli::Y,
                _ => Pauli::Z,
            };
        }
        let string = PauliString::new(letters);
        let mut tr = C64::new(0.0, 0.0);
        for row in 0..dim {
            let (col, phase) = string.row_action(row);
            tr += phase * m[(col, row)];
        }
        let coeff = tr / dim as f64;
        debug_assert!(coeff.im.abs() <= 1e-10 * f64::max(1.0, m.max_abs()));
        if coeff.re.abs() >= prune_tol {
            terms.push((string, coeff.re));
        }
    }
    Ok(PauliHamiltonian { n_qubits, terms })
}

/// One qubit-wise-commuting measurement group.
#[derive(Debug, Clone, PartialEq)]
pub struct QwcGroup {
    /// Indices into the owning Hamiltonian's term list, ascending.
    pub members: Vec<usize>,
    /// Per-qubit measurement letter. Positions where every member carries I
    /// default to Z.
    pub basis: Vec<Pauli>,
}

/// Partitions the Hamiltonian's terms into QWC groups.
///
/// Greedy largest-degree-first coloring of the incompatibility graph, with
/// ties broken by lexicographic string order, so the partition is
/// deterministic for a given term set.
pub fn qwc_partition(h: &PauliHamiltonian) -> Vec<QwcGroup> {
    let n_terms = h.terms.len();
    let strings: Vec<&PauliString> = h.terms.iter().map(|(s, _)| s).collect();

    let mut order: Vec<usize> = (0..n_terms).collect();
    order.sort_by(|&a, &b| strings[a].cmp(strings[b]));

    let mut degree = vec![0usize; n_terms];
    for i in 0..n_terms {
        for j in (i + 1)..n_terms {
            if !strings[i].qwc_compatible(strings[j]) {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    // Stable sort keeps the lexicographic order among equal degrees.
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        let slot = groups.iter_mut().find(|members| {
            members
                .iter()
                .all(|&m| strings[m].qwc_compatible(strings[idx]))
        });
        match slot {
            Some(members) => members.push(idx),
            None => groups.push(vec![idx]),
        }
    }

    groups
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let mut basis = vec![Pauli::Z; h.n_qubits];
            for (q, b) in basis.iter_mut().enumerate() {
                if let Some(p) = members
                    .iter()
                    .map(|&m| strings[m].letters()[q])
                    .find(|&p| p != Pauli::I)
                {
                    *b = p;
                }
            }
            QwcGroup { members, basis }
        })
        .collect()
}

/// One term of the JSON observable/decomposition schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTermRecord {
    pub string: String,
    pub coefficient: f64,
}

/// JSON observable file: `{"n_qubits": 2, "terms": [{"string": "XX", "coefficient": 0.5}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub n_qubits: usize,
    pub terms: Vec<PauliTermRecord>,
}

/// Parses an observable file into a validated Hamiltonian.
pub fn parse_observable(text: &str) -> Result<PauliHamiltonian, PauliError> {
    let file: ObservableFile =
        serde_json::from_str(text).map_err(|e| PauliError::Parse(e.to_string()))?;
    let mut terms = Vec::with_capacity(file.terms.len());
    for rec in &file.terms {
        let string = PauliString::from_str(&rec.string).map_err(PauliError::Parse)?;
        terms.push((string, rec.coefficient));
    }
    PauliHamiltonian::new(file.n_qubits, terms)
}
