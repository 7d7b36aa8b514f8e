use serde::{Deserialize, Serialize};

use super::{HamiltonianError, HamiltonianMetadata, Pauli, PauliTerm, QubitHamiltonian};
use crate::geometry::{neighbor_graph, MolecularGeometry};

/// Heisenberg chain with exponentially decaying exchange
/// `J_ij = j0 * exp(-(r_ij - r0) / xi)` on the `r_cut` neighbor graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainModelParams {
    pub j0: f64,
    /// Reference bond length, Angstrom.
    pub r0: f64,
    /// Decay length, Angstrom.
    pub xi: f64,
    /// Uniform longitudinal field.
    pub h: f64,
    pub r_cut: f64,
}

impl Default for ChainModelParams {
    fn default() -> Self {
        Self {
            j0: 1.0,
            r0: 1.0,
            xi: 1.0,
            h: 0.0,
            r_cut: 1.5,
        }
    }
}

/// One qubit per atom, in atom order.
pub fn build_chain_model(
    geom: &MolecularGeometry,
    params: &ChainModelParams,
) -> Result<QubitHamiltonian, HamiltonianError> {
    if geom.is_empty() {
        return Err(HamiltonianError::ChainModel("empty geometry".into()));
    }
    if !(params.xi > 0.0) {
        return Err(HamiltonianError::ChainModel(format!(
            "xi must be positive, got {}",
            params.xi
        )));
    }
    if !(params.r_cut > 0.0) {
        return Err(HamiltonianError::ChainModel(format!(
            "r_cut must be positive, got {}",
            params.r_cut
        )));
    }
    let first = &geom.atoms()[0].element;
    if let Some(a) = geom.atoms().iter().find(|a| &a.element != first) {
        return Err(HamiltonianError::ChainModel(format!(
            "mixed elements `{first}` and `{}`",
            a.element
        )));
    }
    let n = geom.len();
    let mut terms = Vec::new();
    for (i, j) in neighbor_graph(geom, params.r_cut) {
        let coupling = params.j0 * (-(geom.distance(i, j) - params.r0) / params.xi).exp();
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(PauliTerm::new(coupling, vec![(i, p), (j, p)])?);
        }
    }
    for i in 0..n {
        terms.push(PauliTerm::new(params.h, vec![(i, Pauli::Z)])?);
    }
    let metadata = HamiltonianMetadata {
        source: format!("chain:{first}{n}"),
        geometry: Some(geom.clone()),
        atom_qubit_map: Some((0..n).map(|i| vec![i]).collect()),
        ..HamiltonianMetadata::default()
    };
    QubitHamiltonian::new(n, terms, metadata)
}
