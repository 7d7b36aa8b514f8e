//! Qubit Hamiltonians as weighted Pauli-string sums.
//!
//! Terms are grouped by their X/Y flip mask; each group stores a per-basis
//! weight vector so that `H|psi>` is one gather/scatter pass per group.

mod chain;
mod document;
mod pauli;
mod spectrum;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::Statevector;
use crate::geometry::MolecularGeometry;

pub use chain::{build_chain_model, ChainModelParams};
pub use document::{
    parse_hamiltonian, AtomRecord, EnergiesRecord, HamiltonianDocument, TermRecord, FORMAT_VERSION,
};
pub use pauli::{Pauli, PauliTerm};
pub use spectrum::{exact_ground_state, SpectrumConfig, SpectrumResult};

/// Largest register the dense kernels accept by default.
pub const DEFAULT_QUBIT_CAP: usize = 14;
/// Hard ceiling on `n_qubits` for any Hamiltonian.
pub const MAX_QUBITS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("state has {got} amplitudes, Hamiltonian needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state norm {0} differs from 1 by more than 1e-10")]
    NotNormalized(f64),
    #[error("{n_qubits} qubits exceeds the dense cap of {cap}")]
    CapExceeded { n_qubits: usize, cap: usize },
    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("bit list has length {got}, expected {expected}")]
    BitLengthMismatch { expected: usize, got: usize },
    #[error("chain model: {0}")]
    ChainModel(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReferenceEnergies {
    pub hf: Option<f64>,
    pub fci: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HamiltonianMetadata {
    pub source: String,
    pub geometry: Option<MolecularGeometry>,
    pub energies: ReferenceEnergies,
    pub hf_bitstring: Option<Vec<u8>>,
    /// Atom index to the contiguous qubit block that atom owns.
    pub atom_qubit_map: Option<Vec<Vec<usize>>>,
    /// Free-form provenance block carried through unchanged.
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug)]
struct FlipGroup {
    x_mask: usize,
    /// `(coefficient * phase, z_mask)` per term in the group.
    terms: Vec<(Complex64, usize)>,
    weights: Option<Vec<Complex64>>,
}

impl FlipGroup {
    fn weight(&self, b: usize) -> Complex64 {
        match &self.weights {
            Some(w) => w[b],
            None => self
                .terms
                .iter()
                .map(|&(c, z)| if (b & z).count_ones() % 2 == 0 { c } else { -c })
                .sum(),
        }
    }
}

/// Entries of precomputed group weights kept in memory at most (per Hamiltonian).
const WEIGHT_BUDGET: usize = 1 << 22;

#[derive(Debug)]
pub struct QubitHamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    metadata: HamiltonianMetadata,
    compiled: OnceLock<Vec<FlipGroup>>,
}

impl Clone for QubitHamiltonian {
    fn clone(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.clone(),
            metadata: self.metadata.clone(),
            compiled: OnceLock::new(),
        }
    }
}

impl PartialEq for QubitHamiltonian {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits
            && self.terms == other.terms
            && self.metadata == other.metadata
    }
}

impl QubitHamiltonian {
    pub fn new(
        n_qubits: usize,
        terms: Vec<PauliTerm>,
        metadata: HamiltonianMetadata,
    ) -> Result<Self, HamiltonianError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(HamiltonianError::Validation(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if terms.is_empty() {
            return Err(HamiltonianError::Validation("terms list is empty".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if let Some(q) = t.max_qubit() {
                if q >= n_qubits {
                    return Err(HamiltonianError::Validation(format!(
                        "term {i} acts on qubit {q} but n_qubits is {n_qubits}"
                    )));
                }
            }
        }
        if let Some(bits) = &metadata.hf_bitstring {
            if bits.len() != n_qubits || bits.iter().any(|&b| b > 1) {
                return Err(HamiltonianError::Validation(format!(
                    "hf_bitstring must hold {n_qubits} entries of 0/1"
                )));
            }
        }
        if let Some(map) = &metadata.atom_qubit_map {
            let mut seen = vec![false; n_qubits];
            for q in map.iter().flatten() {
                if *q >= n_qubits || seen[*q] {
                    return Err(HamiltonianError::Validation(format!(
                        "atom_qubit_map entry {q} out of range or repeated"
                    )));
                }
                seen[*q] = true;
            }
            if let Some(g) = &metadata.geometry {
                if g.len() != map.len() {
                    return Err(HamiltonianError::Validation(format!(
                        "atom_qubit_map has {} blocks for {} atoms",
                        map.len(),
                        g.len()
                    )));
                }
            }
        }
        Ok(Self {
            n_qubits,
            terms,
            metadata,
            compiled: OnceLock::new(),
        })
    }

    /// Convenience constructor from `(coefficient, label)` pairs.
    pub fn from_terms<S: AsRef<str>>(
        n_qubits: usize,
        terms: Vec<(f64, S)>,
    ) -> Result<Self, HamiltonianError> {
        let terms = terms
            .into_iter()
            .map(|(c, p)| PauliTerm::parse(c, p.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n_qubits, terms, HamiltonianMetadata::default())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn metadata(&self) -> &HamiltonianMetadata {
        &self.metadata
    }

    pub fn with_metadata(
        mut self,
        metadata: HamiltonianMetadata,
    ) -> Result<Self, HamiltonianError> {
        let terms = std::mem::take(&mut self.terms);
        Self::new(self.n_qubits, terms, metadata)
    }

    /// `sum |c_k|`, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient().abs()).sum()
    }

    /// True when every term has an even number of Y factors (real matrix).
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.y_count() % 2 == 0)
    }

    fn groups(&self) -> &[FlipGroup] {
        self.compiled.get_or_init(|| {
            let mut by_mask: BTreeMap<usize, Vec<(Complex64, usize)>> = BTreeMap::new();
            for t in &self.terms {
                let (x, z, phase) = t.masks();
                by_mask
                    .entry(x)
                    .or_default()
                    .push((phase * t.coefficient(), z));
            }
            let dim = self.dim();
            let dense_ok = by_mask.len().saturating_mul(dim) <= WEIGHT_BUDGET;
            by_mask
                .into_iter()
                .map(|(x_mask, terms)| {
                    let weights = dense_ok.then(|| {
                        (0..dim)
                            .map(|b| {
                                terms
                                    .iter()
                                    .map(
                                        |&(c, z)| {
                                            if (b & z).count_ones() % 2 == 0 {
                                                c
                                            } else {
                                                -c
                                            }
                                        },
                                    )
                                    .sum()
                            })
                            .collect()
                    });
                    FlipGroup {
                        x_mask,
                        terms,
                        weights,
                    }
                })
                .collect()
        })
    }

    fn check_dim(&self, psi: &Statevector) -> Result<(), HamiltonianError> {
        if psi.dim() != self.dim() {
            return Err(HamiltonianError::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        Ok(())
    }

    fn check_normalized(psi: &Statevector) -> Result<(), HamiltonianError> {
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(HamiltonianError::NotNormalized(n));
        }
        Ok(())
    }

    /// `H psi` as a fresh vector.
    pub fn apply(&self, psi: &Statevector) -> Result<Statevector, HamiltonianError> {
        self.check_dim(psi)?;
        let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(Statevector::from_amplitudes(out).expect("power-of-two length"))
    }

    pub(crate) fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for g in self.groups() {
            match &g.weights {
                Some(w) => {
                    for (b, (&a, &wb)) in psi.iter().zip(w).enumerate() {
                        out[b ^ g.x_mask] += wb * a;
                    }
                }
                None => {
                    for (b, &a) in psi.iter().enumerate() {
                        out[b ^ g.x_mask] += g.weight(b) * a;
                    }
                }
            }
        }
    }

    /// `<psi|H|psi>` for a normalized state.
    pub fn expectation(&self, psi: &Statevector) -> Result<f64, HamiltonianError> {
        self.check_dim(psi)?;
        Self::check_normalized(psi)?;
        let v = self.expectation_complex(psi.amplitudes());
        assert!(
            v.im.abs() <= 1e-10 * self.norm_bound().max(1.0),
            "imaginary residue {} in a Hermitian expectation",
            v.im
        );
        Ok(v.re)
    }

    pub(crate) fn expectation_unchecked(&self, psi: &Statevector) -> f64 {
        self.expectation_complex(psi.amplitudes()).re
    }

    fn expectation_complex(&self, psi: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for g in self.groups() {
            match (&g.weights, g.x_mask) {
                (Some(w), 0) => {
                    let s: f64 = psi.iter().zip(w).map(|(a, wb)| a.norm_sqr() * wb.re).sum();
                    acc += s;
                }
                (Some(w), x) => {
                    for (b, (&a, &wb)) in psi.iter().zip(w).enumerate() {
                        acc += psi[b ^ x].conj() * wb * a;
                    }
                }
                (None, x) => {
                    for (b, &a) in psi.iter().enumerate() {
                        acc += psi[b ^ x].conj() * g.weight(b) * a;
                    }
                }
            }
        }
        acc
    }

    /// `<H^2> - <H>^2`, clamped at zero.
    pub fn variance(&self, psi: &Statevector) -> Result<f64, HamiltonianError> {
        self.check_dim(psi)?;
        Self::check_normalized(psi)?;
        let hpsi = self.apply(psi)?;
        let mean = psi.inner(&hpsi).re;
        let second = hpsi.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>();
        let var = second - mean * mean;
        debug_assert!(var >= -1e-10 * (1.0 + second), "negative variance {var}");
        Ok(var.max(0.0))
    }

    /// `<bits|H|bits>`: only all-Z terms contribute.
    pub fn basis_state_energy(&self, bits: &[u8]) -> Result<f64, HamiltonianError> {
        if bits.len() != self.n_qubits {
            return Err(HamiltonianError::BitLengthMismatch {
                expected: self.n_qubits,
                got: bits.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .filter(|t| t.is_diagonal())
            .map(|t| {
                let parity = t.factors().iter().filter(|&&(q, _)| bits[q] != 0).count();
                if parity % 2 == 0 {
                    t.coefficient()
                } else {
                    -t.coefficient()
                }
            })
            .sum())
    }

    /// Dense matrix, row-major, `dim x dim`. Intended for small registers.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let dim = self.dim();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for g in self.groups() {
            for (b, row_src) in (0..dim).map(|b| (b, g.weight(b))) {
                m[b ^ g.x_mask][b] += row_src;
            }
        }
        m
    }
}

/// Free-function form of [`QubitHamiltonian::apply`].
pub fn apply_hamiltonian(
    h: &QubitHamiltonian,
    psi: &Statevector,
) -> Result<Statevector, HamiltonianError> {
    h.apply(psi)
}

pub fn expectation(h: &QubitHamiltonian, psi: &Statevector) -> Result<f64, HamiltonianError> {
    h.expectation(psi)
}

pub fn hamiltonian_variance(
    h: &QubitHamiltonian,
    psi: &Statevector,
) -> Result<f64, HamiltonianError> {
    h.variance(psi)
}

pub fn basis_state_energy(h: &QubitHamiltonian, bits: &[u8]) -> Result<f64, HamiltonianError> {
    h.basis_state_energy(bits)
}
