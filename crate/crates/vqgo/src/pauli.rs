//! Pauli operators, tensor-product strings and the operator basis they span.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, CVec};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMat {
        let (a, b, c, d) = match self {
            Pauli::I => ((1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)),
            Pauli::X => ((0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)),
            Pauli::Y => ((0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)),
            Pauli::Z => ((1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)),
        };
        ndarray::arr2(&[
            [C64::new(a.0, a.1), C64::new(b.0, b.1)],
            [C64::new(c.0, c.1), C64::new(d.0, d.1)],
        ])
    }

    fn code(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    fn from_code(c: usize) -> Pauli {
        Pauli::ALL[c & 3]
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis. The leftmost label acts on
/// qubit 1, which is the most significant factor of the Kronecker product.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.0.len()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Position in the lexicographic basis ordering of `pauli_basis`.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, p| acc * 4 + p.code())
    }

    pub fn from_index(n: usize, mut idx: usize) -> Self {
        let mut labels = vec![Pauli::I; n];
        for k in (0..n).rev() {
            labels[k] = Pauli::from_code(idx & 3);
            idx >>= 2;
        }
        PauliString(labels)
    }

    pub fn matrix(&self) -> CMat {
        let mut out = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
        for p in &self.0 {
            out = kron(&out, &p.matrix());
        }
        out
    }

    /// Expectation value `tr[ρ σ]` without materializing the full matrix.
    pub fn expectation(&self, rho: &CMat) -> f64 {
        let d = self.dim();
        debug_assert_eq!(rho.nrows(), d);
        let mut acc = C64::new(0.0, 0.0);
        for row in 0..d {
            // σ has exactly one nonzero per row: column and weight below
            let (col, w) = self.row_entry(row);
            acc += w * rho[[col, row]];
        }
        acc.re
    }

    /// The single nonzero entry of row `r`: returns `(column, value)`.
    pub fn row_entry(&self, r: usize) -> (usize, C64) {
        let n = self.0.len();
        let mut col = 0usize;
        let mut val = C64::new(1.0, 0.0);
        for (k, p) in self.0.iter().enumerate() {
            let bit = (r >> (n - 1 - k)) & 1;
            let (b, v) = match p {
                Pauli::I => (bit, C64::new(1.0, 0.0)),
                Pauli::X => (1 - bit, C64::new(1.0, 0.0)),
                Pauli::Y => (1 - bit, if bit == 0 { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }),
                Pauli::Z => (bit, if bit == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) }),
            };
            col = (col << 1) | b;
            val *= v;
        }
        (col, val)
    }

    /// Apply to a state vector.
    pub fn apply(&self, psi: &CVec) -> CVec {
        let d = self.dim();
        let mut out = CVec::zeros(d);
        for row in 0..d {
            let (col, w) = self.row_entry(row);
            out[row] = w * psi[col];
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.label())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| match c {
                'I' | '1' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArg(format!("bad Pauli label '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(Error::InvalidArg("empty Pauli string".into()));
        }
        Ok(PauliString(labels))
    }
}

/// The 4ⁿ-element operator basis in lexicographic order (I < X < Y < Z per
/// site, leftmost site most significant), so `I…I` comes first and `Z…Z`
/// last. Deterministic and stable across runs.
pub fn pauli_basis(n: usize) -> Result<Vec<PauliString>> {
    if n == 0 {
        return Err(Error::InvalidArg("pauli_basis requires n ≥ 1".into()));
    }
    Ok((0..4usize.pow(n as u32))
        .map(|idx| PauliString::from_index(n, idx))
        .collect())
}
