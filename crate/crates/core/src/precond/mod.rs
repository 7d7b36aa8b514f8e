//! Geometry-conditioned preconditioner: invariant atomic features feed one
//! readout network per element, whose `pi * tanh` outputs are routed to the
//! rotation angles of the qubits that atom owns.

mod checkpoint;
mod labels;
mod mlp;
mod train;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{
    self, disentangle_bits, AngleSlot, AnsatzSpec, CircuitError, ParameterVector,
};
use crate::geometry::{FeatureConfig, Featurizer, GeometryError, MolecularGeometry};
use crate::hamiltonian::HamiltonianError;
use crate::optim::OptimError;

pub use checkpoint::{write_loss_csv, CHECKPOINT_VERSION};
pub use labels::qubit_map_of;
pub use labels::{generate_labels, LabelFailure, TrainingExample, TrainingSet};
pub use mlp::{Dense, Mlp};
pub use train::{adapt_readout, train, EpochLoss, FidelityTerm, TrainConfig, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecondError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("element `{0}` has no readout network")]
    UnmappedElement(String),
    #[error("qubit coverage: {0}")]
    QubitCoverage(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("training diverged at epoch {epoch}: loss {loss:e} exceeds 1e3 x initial {initial:e}")]
    Diverged {
        epoch: usize,
        loss: f64,
        initial: f64,
        trace: Vec<EpochLoss>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Per-feature standardization fitted on the first training set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureScale {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScale {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..dim)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let std = (0..dim)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-8 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionerModel {
    featurizer: Featurizer,
    spec: AnsatzSpec,
    /// Qubits owned by one atom of each vocabulary element.
    qubits_per_element: Vec<usize>,
    hidden: usize,
    readouts: Vec<Mlp>,
    scale: Option<FeatureScale>,
    frozen_feature_scale: bool,
}

impl PreconditionerModel {
    /// Fresh model; the output layers start at zero so every angle is 0.
    pub fn new(
        feature_config: FeatureConfig,
        vocabulary: &[String],
        qubits_per_element: &[(String, usize)],
        spec: AnsatzSpec,
        hidden: usize,
        seed: u64,
    ) -> Result<Self, PrecondError> {
        if hidden == 0 {
            return Err(PrecondError::InvalidConfig(
                "hidden width must be >= 1".into(),
            ));
        }
        let featurizer = Featurizer::new(feature_config, vocabulary)?;
        let qpe = featurizer
            .vocabulary()
            .iter()
            .map(|e| {
                qubits_per_element
                    .iter()
                    .find(|(s, _)| s == e)
                    .map(|&(_, k)| k)
                    .ok_or_else(|| {
                        PrecondError::QubitCoverage(format!("no qubit count for element `{e}`"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_in = featurizer.len();
        let readouts = qpe
            .iter()
            .map(|&k| Mlp::new(n_in, hidden, 2 * spec.layers() * k, &mut rng))
            .collect();
        Ok(Self {
            featurizer,
            spec,
            qubits_per_element: qpe,
            hidden,
            readouts,
            scale: None,
            frozen_feature_scale: false,
        })
    }

    /// Model sized for a dataset: vocabulary and per-element qubit counts are
    /// read from the examples' geometries and qubit maps.
    pub fn for_dataset(
        set: &TrainingSet,
        spec: AnsatzSpec,
        feature_config: FeatureConfig,
        hidden: usize,
        seed: u64,
    ) -> Result<Self, PrecondError> {
        if set.is_empty() {
            return Err(PrecondError::EmptyDataset);
        }
        let mut counts: Vec<(String, usize)> = Vec::new();
        for ex in set.examples() {
            let geom = ex.geometry()?;
            for (atom, block) in geom.atoms().iter().zip(ex.qubit_map()?) {
                match counts.iter().find(|(e, _)| e == &atom.element) {
                    Some(&(_, k)) if k != block.len() => {
                        return Err(PrecondError::QubitCoverage(format!(
                            "element `{}` owns both {k} and {} qubits",
                            atom.element,
                            block.len()
                        )))
                    }
                    Some(_) => {}
                    None => counts.push((atom.element.clone(), block.len())),
                }
            }
        }
        let vocab: Vec<String> = counts.iter().map(|(e, _)| e.clone()).collect();
        Self::new(feature_config, &vocab, &counts, spec, hidden, seed)
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn vocabulary(&self) -> &[String] {
        self.featurizer.vocabulary()
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn readouts(&self) -> &[Mlp] {
        &self.readouts
    }

    pub fn feature_scale(&self) -> Option<&FeatureScale> {
        self.scale.as_ref()
    }

    pub fn frozen_feature_scale(&self) -> bool {
        self.frozen_feature_scale
    }

    fn element_index(&self, symbol: &str) -> Result<usize, PrecondError> {
        self.vocabulary()
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| PrecondError::UnmappedElement(symbol.to_string()))
    }

    fn check_map(&self, geom: &MolecularGeometry, map: &[Vec<usize>]) -> Result<(), PrecondError> {
        if map.len() != geom.len() {
            return Err(PrecondError::QubitCoverage(format!(
                "{} qubit blocks for {} atoms",
                map.len(),
                geom.len()
            )));
        }
        let mut seen = vec![false; self.spec.n_qubits];
        for (atom, block) in geom.atoms().iter().zip(map) {
            let e = self.element_index(&atom.element)?;
            if block.len() != self.qubits_per_element[e] {
                return Err(PrecondError::QubitCoverage(format!(
                    "`{}` atom owns {} qubits, readout expects {}",
                    atom.element,
                    block.len(),
                    self.qubits_per_element[e]
                )));
            }
            for &q in block {
                if q >= seen.len() || seen[q] {
                    return Err(PrecondError::QubitCoverage(format!(
                        "qubit {q} out of range or repeated"
                    )));
                }
                seen[q] = true;
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(PrecondError::QubitCoverage(format!(
                "qubit {q} has no owning atom"
            )));
        }
        Ok(())
    }

    /// Scaled features per atom.
    pub(crate) fn atom_inputs(
        &self,
        geom: &MolecularGeometry,
    ) -> Result<Vec<Vec<f64>>, PrecondError> {
        let mut rows: Vec<Vec<f64>> = self
            .featurizer
            .all_features(geom)?
            .into_iter()
            .map(|f| f.0)
            .collect();
        if let Some(s) = &self.scale {
            rows.iter_mut().for_each(|r| s.apply(r));
        }
        Ok(rows)
    }

    /// Flat parameter index of output `o` of an atom owning `block`.
    pub(crate) fn route(&self, block: &[usize], o: usize) -> usize {
        let per_qubit = 2 * self.spec.layers();
        let (j, rest) = (o / per_qubit, o % per_qubit);
        let slot = if rest % 2 == 0 {
            AngleSlot::Y
        } else {
            AngleSlot::Z
        };
        self.spec.index(block[j], rest / 2, slot)
    }

    pub fn predict(
        &self,
        geom: &MolecularGeometry,
        atom_qubit_map: &[Vec<usize>],
    ) -> Result<ParameterVector, PrecondError> {
        self.check_map(geom, atom_qubit_map)?;
        let inputs = self.atom_inputs(geom)?;
        let mut theta = vec![0.0; self.spec.param_count()];
        for ((atom, block), x) in geom.atoms().iter().zip(atom_qubit_map).zip(&inputs) {
            let mlp = &self.readouts[self.element_index(&atom.element)?];
            for (o, v) in mlp.predict(x).into_iter().enumerate() {
                theta[self.route(block, o)] = v;
            }
        }
        Ok(ParameterVector::new(theta)?)
    }
}

/// `predict` with an explicit ansatz check.
pub fn predict(
    model: &PreconditionerModel,
    geom: &MolecularGeometry,
    spec: &AnsatzSpec,
    atom_qubit_map: &[Vec<usize>],
) -> Result<ParameterVector, PrecondError> {
    if spec != model.spec() {
        return Err(PrecondError::InvalidConfig(format!(
            "model built for {:?}, asked for {:?}",
            model.spec(),
            spec
        )));
    }
    model.predict(geom, atom_qubit_map)
}

/// `||theta - theta*||^2 + lambda (1 - F(theta, theta*))`.
pub fn gauge_loss(
    theta: &[f64],
    target: &[f64],
    spec: &AnsatzSpec,
    lambda: f64,
) -> Result<f64, PrecondError> {
    let anchor = squared_distance(theta, target, spec)?;
    if lambda == 0.0 || theta == target {
        return Ok(anchor);
    }
    Ok(anchor + lambda * (1.0 - circuit::fidelity(spec, theta, target)?))
}

fn squared_distance(theta: &[f64], target: &[f64], spec: &AnsatzSpec) -> Result<f64, PrecondError> {
    spec.check_params(theta)?;
    spec.check_params(target)?;
    Ok(theta
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Exact gradient of `F(theta, target)` with respect to `theta` by parameter shift.
pub fn fidelity_gradient(
    spec: &AnsatzSpec,
    theta: &[f64],
    target: &[f64],
) -> Result<Vec<f64>, PrecondError> {
    spec.check_params(theta)?;
    spec.check_params(target)?;
    let reference = circuit::prepare_unchecked(spec, target);
    let overlap = |t: &[f64]| {
        circuit::prepare_unchecked(spec, t)
            .inner(&reference)
            .norm_sqr()
    };
    Ok((0..theta.len())
        .into_par_iter()
        .map(|k| {
            let mut t = theta.to_vec();
            t[k] += FRAC_PI_2;
            let plus = overlap(&t);
            t[k] -= PI;
            let minus = overlap(&t);
            0.5 * (plus - minus)
        })
        .collect())
}

/// Angles that prepare the computational basis state `bits` exactly.
///
/// At depth 0 the flips sit in the initial layer. Otherwise they sit in the
/// last rotation layer on the preimage of `bits` under the entangler, so the
/// final CNOT layer maps them onto `bits`.
pub fn hf_theta(spec: &AnsatzSpec, bits: &[u8]) -> Result<ParameterVector, PrecondError> {
    if bits.len() != spec.n_qubits {
        return Err(PrecondError::Hamiltonian(
            HamiltonianError::BitLengthMismatch {
                expected: spec.n_qubits,
                got: bits.len(),
            },
        ));
    }
    let mut flips = bits.to_vec();
    if spec.depth > 0 {
        disentangle_bits(&mut flips);
    }
    let mut theta = vec![0.0; spec.param_count()];
    for (q, &b) in flips.iter().enumerate() {
        if b == 1 {
            theta[spec.index(q, spec.depth, AngleSlot::Y)] = PI;
        }
    }
    Ok(ParameterVector::new(theta)?)
}
