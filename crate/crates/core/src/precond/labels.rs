use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PrecondError;
use crate::circuit::{self, AnsatzSpec, ParameterVector};
use crate::geometry::MolecularGeometry;
use crate::hamiltonian::{HamiltonianDocument, QubitHamiltonian};
use crate::optim::{circuit_basin_hopping, circuit_lbfgs, BasinHoppingConfig};

/// Labels this far above the exact ground energy (Ha) are flagged.
pub const SUSPECT_GAP: f64 = 1e-3;
/// Recorded energies must be reproduced by the stored angles to this tolerance (Ha).
pub const LABEL_ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub hamiltonian: QubitHamiltonian,
    pub target_parameters: ParameterVector,
    pub target_energy: f64,
    pub exact_energy: Option<f64>,
    pub suspect: bool,
}

impl TrainingExample {
    pub fn geometry(&self) -> Result<&MolecularGeometry, PrecondError> {
        self.hamiltonian
            .metadata()
            .geometry
            .as_ref()
            .ok_or_else(|| {
                PrecondError::InvalidDataset(format!(
                    "`{}` has no geometry",
                    self.hamiltonian.metadata().source
                ))
            })
    }

    /// Explicit atom-to-qubit map, or one qubit per atom when the counts agree.
    pub fn qubit_map(&self) -> Result<Vec<Vec<usize>>, PrecondError> {
        qubit_map_of(&self.hamiltonian)
    }
}

/// Atom-to-qubit blocks of a Hamiltonian: the explicit map, or one qubit per
/// atom when the counts agree.
pub fn qubit_map_of(h: &QubitHamiltonian) -> Result<Vec<Vec<usize>>, PrecondError> {
    if let Some(map) = &h.metadata().atom_qubit_map {
        return Ok(map.clone());
    }
    match &h.metadata().geometry {
        Some(g) if g.len() == h.n_qubits() => Ok((0..g.len()).map(|i| vec![i]).collect()),
        _ => Err(PrecondError::QubitCoverage(
            "Hamiltonian has no atom_qubit_map and atom count differs from qubit count".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    spec: AnsatzSpec,
    examples: Vec<TrainingExample>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRecord {
    hamiltonian: HamiltonianDocument,
    target_parameters: Vec<f64>,
    target_energy: f64,
    #[serde(default)]
    exact_energy: Option<f64>,
    #[serde(default)]
    suspect: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelFile {
    spec: AnsatzSpec,
    examples: Vec<LabelRecord>,
}

impl TrainingSet {
    pub fn empty(spec: AnsatzSpec) -> Self {
        Self {
            spec,
            examples: Vec::new(),
        }
    }

    /// Validates that every example's angles reproduce its recorded energy.
    pub fn new(spec: AnsatzSpec, examples: Vec<TrainingExample>) -> Result<Self, PrecondError> {
        let mut set = Self::empty(spec);
        for ex in examples {
            set.push(ex)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, ex: TrainingExample) -> Result<(), PrecondError> {
        let e = circuit::energy(&self.spec, &ex.target_parameters, &ex.hamiltonian)?;
        if (e - ex.target_energy).abs() > LABEL_ENERGY_TOL {
            return Err(PrecondError::InvalidDataset(format!(
                "label energy {} but angles give {e}",
                ex.target_energy
            )));
        }
        ex.geometry()?;
        ex.qubit_map()?;
        self.examples.push(ex);
        Ok(())
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Subset by indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            spec: self.spec,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = LabelFile {
            spec: self.spec,
            examples: self
                .examples
                .iter()
                .map(|ex| LabelRecord {
                    hamiltonian: HamiltonianDocument::from_hamiltonian(&ex.hamiltonian),
                    target_parameters: ex.target_parameters.to_vec(),
                    target_energy: ex.target_energy,
                    exact_energy: ex.exact_energy,
                    suspect: ex.suspect,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("labels serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, PrecondError> {
        let file: LabelFile =
            serde_json::from_str(text).map_err(|e| PrecondError::InvalidDataset(e.to_string()))?;
        let examples = file
            .examples
            .into_iter()
            .map(|r| {
                Ok(TrainingExample {
                    hamiltonian: r.hamiltonian.into_hamiltonian()?,
                    target_parameters: ParameterVector::new(r.target_parameters)?,
                    target_energy: r.target_energy,
                    exact_energy: r.exact_energy,
                    suspect: r.suspect,
                })
            })
            .collect::<Result<Vec<_>, PrecondError>>()?;
        Self::new(file.spec, examples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelFailure {
    pub index: usize,
    pub message: String,
}

/// Basin-hopping labels for each Hamiltonian.
///
/// Every example also refines from the previous example's label and keeps
/// that result when it is within 1e-8 Ha of the basin-hopping optimum, so
/// neighbouring geometries get labels from the same gauge branch. Repeated
/// Hamiltonians reuse their first label. Failures are reported per example.
pub fn generate_labels(
    hamiltonians: &[QubitHamiltonian],
    spec: &AnsatzSpec,
    bh: &BasinHoppingConfig,
) -> Result<(TrainingSet, Vec<LabelFailure>), PrecondError> {
    if let Some(h) = hamiltonians.iter().find(|h| h.n_qubits() != spec.n_qubits) {
        return Err(PrecondError::InvalidDataset(format!(
            "Hamiltonian `{}` has {} qubits, ansatz has {}",
            h.metadata().source,
            h.n_qubits(),
            spec.n_qubits
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bh.seed);
    let theta0: Vec<f64> = (0..spec.param_count())
        .map(|_| rng.random_range(-0.1..0.1))
        .collect();

    let mut set = TrainingSet::empty(*spec);
    let mut failures = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    for (index, h) in hamiltonians.iter().enumerate() {
        if let Some(done) = set.examples.iter().find(|ex| &ex.hamiltonian == h) {
            let ex = done.clone();
            previous = Some(ex.target_parameters.to_vec());
            set.examples.push(ex);
            continue;
        }
        let result = label_one(h, spec, bh, &theta0, previous.as_deref());
        match result {
            Ok(ex) => {
                previous = Some(ex.target_parameters.to_vec());
                if let Err(e) = set.push(ex) {
                    failures.push(LabelFailure {
                        index,
                        message: e.to_string(),
                    });
                }
            }
            Err(e) => failures.push(LabelFailure {
                index,
                message: e.to_string(),
            }),
        }
    }
    Ok((set, failures))
}

fn label_one(
    h: &QubitHamiltonian,
    spec: &AnsatzSpec,
    bh: &BasinHoppingConfig,
    theta0: &[f64],
    warm: Option<&[f64]>,
) -> Result<TrainingExample, PrecondError> {
    let global = circuit_basin_hopping(spec, h, theta0, bh)?;
    let mut best = (global.final_energy, global.final_parameters);
    if let Some(w) = warm {
        let local = circuit_lbfgs(spec, h, w, &bh.local)?;
        if local.final_energy <= best.0 + 1e-8 {
            best = (local.final_energy, local.final_parameters);
        }
    }
    let energy = circuit::energy(spec, &best.1, h)?;
    let exact_energy = h
        .ground_state(&Default::default())
        .ok()
        .map(|r| r.ground_energy);
    Ok(TrainingExample {
        hamiltonian: h.clone(),
        suspect: exact_energy.is_some_and(|e| energy > e + SUSPECT_GAP),
        target_parameters: best.1,
        target_energy: energy,
        exact_energy,
    })
}
