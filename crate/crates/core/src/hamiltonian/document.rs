//! JSON interchange document for qubit Hamiltonians.

use serde::{Deserialize, Serialize};

use super::{
    HamiltonianError, HamiltonianMetadata, PauliTerm, QubitHamiltonian, ReferenceEnergies,
};
use crate::geometry::{Atom, MolecularGeometry};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRecord {
    pub element: String,
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergiesRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub c: f64,
    pub p: String,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDocument {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub n_qubits: usize,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<AtomRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hf_bitstring: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergiesRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_qubit_map: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    pub terms: Vec<TermRecord>,
}

impl HamiltonianDocument {
    pub fn from_json(text: &str) -> Result<Self, HamiltonianError> {
        serde_json::from_str(text).map_err(|e| HamiltonianError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn into_hamiltonian(self) -> Result<QubitHamiltonian, HamiltonianError> {
        if self.format_version != FORMAT_VERSION {
            return Err(HamiltonianError::Parse(format!(
                "unsupported `format_version` {}",
                self.format_version
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm::parse(t.c, &t.p))
            .collect::<Result<Vec<_>, _>>()?;
        let geometry = self
            .geometry
            .map(|atoms| {
                MolecularGeometry::new(
                    atoms
                        .into_iter()
                        .map(|a| Atom::new(a.element, a.xyz))
                        .collect(),
                )
                .map_err(|e| HamiltonianError::Validation(format!("`geometry`: {e}")))
            })
            .transpose()?;
        let energies =
            self.energies
                .map_or_else(ReferenceEnergies::default, |e| ReferenceEnergies {
                    hf: e.hf,
                    fci: e.fci,
                });
        let metadata = HamiltonianMetadata {
            source: self.source,
            geometry,
            energies,
            hf_bitstring: self.hf_bitstring,
            atom_qubit_map: self.atom_qubit_map,
            provenance: self.provenance,
        };
        QubitHamiltonian::new(self.n_qubits, terms, metadata)
    }

    pub fn from_hamiltonian(h: &QubitHamiltonian) -> Self {
        let md = h.metadata();
        let energies =
            (md.energies.hf.is_some() || md.energies.fci.is_some()).then_some(EnergiesRecord {
                hf: md.energies.hf,
                fci: md.energies.fci,
            });
        Self {
            format_version: FORMAT_VERSION,
            n_qubits: h.n_qubits(),
            source: md.source.clone(),
            geometry: md.geometry.as_ref().map(|g| {
                g.atoms()
                    .iter()
                    .map(|a| AtomRecord {
                        element: a.element.clone(),
                        xyz: a.position,
                    })
                    .collect()
            }),
            hf_bitstring: md.hf_bitstring.clone(),
            energies,
            atom_qubit_map: md.atom_qubit_map.clone(),
            provenance: md.provenance.clone(),
            terms: h
                .terms()
                .iter()
                .map(|t| TermRecord {
                    c: t.coefficient(),
                    p: t.label(),
                })
                .collect(),
        }
    }
}

/// Parses and validates an interchange document.
pub fn parse_hamiltonian(text: &str) -> Result<QubitHamiltonian, HamiltonianError> {
    HamiltonianDocument::from_json(text)?.into_hamiltonian()
}

impl QubitHamiltonian {
    pub fn from_json(text: &str) -> Result<Self, HamiltonianError> {
        parse_hamiltonian(text)
    }

    pub fn to_json(&self) -> String {
        HamiltonianDocument::from_hamiltonian(self).to_json()
    }
}
