use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HamiltonianError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Dense 2x2 matrix.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[z, one], [one, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[one, z], [z, -one]],
        }
    }
}

/// `coefficient * P_{q1} P_{q2} ...`, factors sorted by qubit; no factors means identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    factors: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(
        coefficient: f64,
        mut factors: Vec<(usize, Pauli)>,
    ) -> Result<Self, HamiltonianError> {
        if !coefficient.is_finite() {
            return Err(HamiltonianError::Validation(format!(
                "non-finite coefficient {coefficient}"
            )));
        }
        factors.sort_by_key(|&(q, _)| q);
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(HamiltonianError::Validation(format!(
                "qubit {} appears twice in one term",
                w[0].0
            )));
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }

    /// Parses `"X0 Z3 Y5"`; the empty string is the identity.
    pub fn parse(coefficient: f64, label: &str) -> Result<Self, HamiltonianError> {
        let mut factors = Vec::new();
        for token in label.split_whitespace() {
            let mut chars = token.chars();
            let op = chars.next().and_then(Pauli::from_symbol).ok_or_else(|| {
                HamiltonianError::Parse(format!("bad Pauli token `{token}` in `{label}`"))
            })?;
            let qubit: usize = chars.as_str().parse().map_err(|_| {
                HamiltonianError::Parse(format!("bad qubit index in token `{token}` of `{label}`"))
            })?;
            factors.push((qubit, op));
        }
        Self::new(coefficient, factors)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.last().map(|&(q, _)| q)
    }

    /// True when every factor is Z (identity included).
    pub fn is_diagonal(&self) -> bool {
        self.factors.iter().all(|&(_, p)| p == Pauli::Z)
    }

    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|&(q, p)| format!("{}{}", p.symbol(), q))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Bit masks and phase such that `P|b> = phase * (-1)^{popcount(b & z)} |b ^ x>`.
    pub(crate) fn masks(&self) -> (usize, usize, Complex64) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut n_y = 0;
        for &(q, p) in &self.factors {
            match p {
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    n_y += 1;
                }
            }
        }
        let phase = match n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (x, z, phase)
    }

    pub(crate) fn y_count(&self) -> usize {
        self.factors.iter().filter(|&&(_, p)| p == Pauli::Y).count()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            write!(f, "{} I", self.coefficient)
        } else {
            write!(f, "{} {}", self.coefficient, self.label())
        }
    }
}
