//! Molecular geometries, rigid motions and invariant atomic-environment features.

mod features;
mod motion;
mod xyz;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{invariant_features, FeatureConfig, FeatureVector, Featurizer};
pub use motion::{apply_rigid_motion, random_rigid_motion, RigidMotion};
pub use xyz::{parse_xyz, write_xyz};

/// Minimum separation between any two atoms, in Angstrom.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("geometry has no atoms")]
    Empty,
    #[error("atom {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("atoms {0} and {1} are closer than 1e-6 Angstrom")]
    Overlap(usize, usize),
    #[error("rigid motion is not a proper rotation: {0}")]
    InvalidMotion(String),
    #[error("atom index {index} out of range for {len} atoms")]
    AtomIndex { index: usize, len: usize },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("could not draw a valid perturbed geometry in 100 attempts")]
    PerturbationFailed,
    #[error("xyz parse error on line {line}: {msg}")]
    Xyz { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: String,
    /// Position in Angstrom.
    pub position: [f64; 3],
}

impl Atom {
    pub fn new(element: impl Into<String>, position: [f64; 3]) -> Self {
        Self {
            element: element.into(),
            position,
        }
    }

    pub fn pos(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct MolecularGeometry {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for MolecularGeometry {
    type Error = GeometryError;
    fn try_from(atoms: Vec<Atom>) -> Result<Self, Self::Error> {
        Self::new(atoms)
    }
}

impl From<MolecularGeometry> for Vec<Atom> {
    fn from(g: MolecularGeometry) -> Self {
        g.atoms
    }
}

impl MolecularGeometry {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, GeometryError> {
        if atoms.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.position.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite(i));
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if (atoms[i].pos() - atoms[j].pos()).norm() < MIN_SEPARATION {
                    return Err(GeometryError::Overlap(i, j));
                }
            }
        }
        Ok(Self { atoms })
    }

    /// `n` atoms of `element` on the x axis with uniform `spacing`.
    pub fn linear_chain(element: &str, n: usize, spacing: f64) -> Result<Self, GeometryError> {
        Self::new(
            (0..n)
                .map(|i| Atom::new(element, [i as f64 * spacing, 0.0, 0.0]))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.atoms[i].pos() - self.atoms[j].pos()).norm()
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.distance(i, j)).collect())
            .collect()
    }

    /// Geometry with atoms reordered so that new atom `k` is old atom `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GeometryError> {
        Self::new(perm.iter().map(|&i| self.atoms[i].clone()).collect())
    }
}

/// Undirected edges `(i, j)`, `i < j`, with `r_ij < r_cut`, sorted lexicographically.
pub fn neighbor_graph(geom: &MolecularGeometry, r_cut: f64) -> Vec<(usize, usize)> {
    let n = geom.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if geom.distance(i, j) < r_cut {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Adds i.i.d. `Normal(0, sigma^2)` noise to every coordinate, redrawing when
/// atoms collide.
pub fn perturb_positions(
    geom: &MolecularGeometry,
    sigma_pos: f64,
    seed: u64,
) -> Result<MolecularGeometry, GeometryError> {
    if !(sigma_pos >= 0.0) {
        return Err(GeometryError::Invalid(format!(
            "sigma_pos must be >= 0, got {sigma_pos}"
        )));
    }
    if sigma_pos == 0.0 {
        return Ok(geom.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_pos).expect("positive sigma");
    for _ in 0..100 {
        let atoms = geom
            .atoms
            .iter()
            .map(|a| {
                let mut p = a.position;
                p.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
                Atom::new(a.element.clone(), p)
            })
            .collect();
        if let Ok(g) = MolecularGeometry::new(atoms) {
            return Ok(g);
        }
    }
    Err(GeometryError::PerturbationFailed)
}

/// Atomic number for the elements this crate knows about.
pub fn atomic_number(symbol: &str) -> Option<u32> {
    const TABLE: [&str; 18] = [
        "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
        "Cl", "Ar",
    ];
    TABLE
        .iter()
        .position(|&s| s == symbol)
        .map(|i| i as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_graph_on_uniform_chain() {
        let far = MolecularGeometry::new(vec![
            Atom::new("H", [0.0, 0.0, 0.0]),
            Atom::new("H", [6.0, 0.0, 0.0]),
        ])
        .unwrap();
        assert!(neighbor_graph(&far, 5.0).is_empty());

        let chain = MolecularGeometry::linear_chain("H", 4, 1.0).unwrap();
        assert_eq!(neighbor_graph(&chain, 1.5), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(
            neighbor_graph(&chain, 2.5),
            vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]
        );
    }

    #[test]
    fn geometry_invariants() {
        assert_eq!(MolecularGeometry::new(vec![]), Err(GeometryError::Empty));
        assert!(matches!(
            MolecularGeometry::new(vec![
                Atom::new("H", [0.0; 3]),
                Atom::new("H", [0.0, 0.0, 1e-8])
            ]),
            Err(GeometryError::Overlap(0, 1))
        ));
        assert!(MolecularGeometry::new(vec![Atom::new("H", [f64::NAN, 0.0, 0.0])]).is_err());
    }

    #[test]
    fn perturbation_contract() {
        let g = MolecularGeometry::linear_chain("H", 4, 1.0).unwrap();
        assert_eq!(perturb_positions(&g, 0.0, 1).unwrap(), g);
        assert_eq!(
            perturb_positions(&g, 0.05, 9).unwrap(),
            perturb_positions(&g, 0.05, 9).unwrap()
        );
        assert_ne!(
            perturb_positions(&g, 0.05, 9).unwrap(),
            perturb_positions(&g, 0.05, 10).unwrap()
        );
        assert!(perturb_positions(&g, -1.0, 1).is_err());
    }

    #[test]
    fn perturbation_rms_matches_sigma() {
        let g = MolecularGeometry::linear_chain("H", 4, 1.0).unwrap();
        let sigma = 0.05;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..10_000u64 {
            let p = perturb_positions(&g, sigma, seed).unwrap();
            for (a, b) in p.atoms().iter().zip(g.atoms()) {
                sum_sq += (a.pos() - b.pos()).norm_squared();
                count += 1;
            }
        }
        let rms = (sum_sq / count as f64).sqrt();
        let expected = sigma * 3f64.sqrt();
        assert!((rms - expected).abs() / expected < 0.02, "rms {rms}");
    }

    #[test]
    fn atomic_numbers() {
        assert_eq!(atomic_number("H"), Some(1));
        assert_eq!(atomic_number("Li"), Some(3));
        assert_eq!(atomic_number("Xx"), None);
    }
}
