use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{atomic_number, GeometryError, MolecularGeometry};

/// Radial/angular basis settings for [`Featurizer`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    /// Cutoff radius, Angstrom.
    pub r_cut: f64,
    pub n_radial: usize,
    /// Gaussian width, Angstrom.
    pub radial_width: f64,
    pub include_three_body: bool,
    /// Chebyshev orders `T_0 .. T_{n_angular - 1}` of the bond-angle cosine.
    pub n_angular: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            r_cut: 5.0,
            n_radial: 8,
            radial_width: 5.0 / 8.0,
            include_three_body: true,
            n_angular: 4,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.r_cut > 0.0) || self.n_radial == 0 || !(self.radial_width > 0.0) {
            return Err(GeometryError::Invalid(
                "feature config needs r_cut > 0, n_radial >= 1, radial_width > 0".into(),
            ));
        }
        if self.include_three_body && self.n_angular == 0 {
            return Err(GeometryError::Invalid(
                "three-body features need n_angular >= 1".into(),
            ));
        }
        Ok(())
    }

    fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_radial).map(|m| self.r_cut * (m + 1) as f64 / self.n_radial as f64)
    }

    /// `phi_m(r) * f_cut(r)` for every radial channel; all zero at or beyond the cutoff.
    fn radial(&self, r: f64) -> Vec<f64> {
        if r >= self.r_cut {
            return vec![0.0; self.n_radial];
        }
        let fc = 0.5 * ((PI * r / self.r_cut).cos() + 1.0);
        let inv = 1.0 / (2.0 * self.radial_width * self.radial_width);
        self.centers()
            .map(|mu| (-(r - mu) * (r - mu) * inv).exp() * fc)
            .collect()
    }
}

/// Rotation- and translation-invariant descriptor of one atomic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Feature map bound to an element vocabulary (ordered by atomic number).
///
/// Layout: for each neighbor element, `n_radial` two-body sums; then for each
/// unordered neighbor-element pair, `n_angular x n_radial` three-body sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    config: FeatureConfig,
    vocabulary: Vec<String>,
}

impl Featurizer {
    pub fn new(config: FeatureConfig, vocabulary: &[String]) -> Result<Self, GeometryError> {
        config.validate()?;
        let mut vocab: Vec<(u32, String)> = vocabulary
            .iter()
            .map(|s| {
                atomic_number(s)
                    .map(|z| (z, s.clone()))
                    .ok_or_else(|| GeometryError::UnknownElement(s.clone()))
            })
            .collect::<Result<_, _>>()?;
        vocab.sort();
        vocab.dedup();
        if vocab.is_empty() {
            return Err(GeometryError::Invalid("empty element vocabulary".into()));
        }
        Ok(Self {
            config,
            vocabulary: vocab.into_iter().map(|(_, s)| s).collect(),
        })
    }

    /// Vocabulary collected from the given geometries.
    pub fn vocabulary_of<'a>(
        geoms: impl IntoIterator<Item = &'a MolecularGeometry>,
    ) -> Vec<String> {
        let mut v: Vec<String> = geoms
            .into_iter()
            .flat_map(|g| g.atoms().iter().map(|a| a.element.clone()))
            .collect();
        v.sort_by_key(|s| (atomic_number(s).unwrap_or(u32::MAX), s.clone()));
        v.dedup();
        v
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn element_index(&self, symbol: &str) -> Result<usize, GeometryError> {
        self.vocabulary
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| GeometryError::UnknownElement(symbol.to_string()))
    }

    fn n_pairs(&self) -> usize {
        let e = self.vocabulary.len();
        e * (e + 1) / 2
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e = self.vocabulary.len();
        lo * e - lo * (lo + 1) / 2 + hi
    }

    pub fn len(&self) -> usize {
        let c = &self.config;
        let two = self.vocabulary.len() * c.n_radial;
        let three = if c.include_three_body {
            self.n_pairs() * c.n_angular * c.n_radial
        } else {
            0
        };
        two + three
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(
        &self,
        geom: &MolecularGeometry,
        atom_index: usize,
    ) -> Result<FeatureVector, GeometryError> {
        if atom_index >= geom.len() {
            return Err(GeometryError::AtomIndex {
                index: atom_index,
                len: geom.len(),
            });
        }
        let c = &self.config;
        let mut out = vec![0.0; self.len()];
        let center = geom.atoms()[atom_index].pos();

        struct Neighbor {
            element: usize,
            unit: nalgebra::Vector3<f64>,
            radial: Vec<f64>,
        }
        let mut neighbors = Vec::new();
        for (j, a) in geom.atoms().iter().enumerate() {
            if j == atom_index {
                continue;
            }
            let d = a.pos() - center;
            let r = d.norm();
            if r >= c.r_cut {
                continue;
            }
            neighbors.push(Neighbor {
                element: self.element_index(&a.element)?,
                unit: d / r,
                radial: c.radial(r),
            });
        }

        for nb in &neighbors {
            let block = &mut out[nb.element * c.n_radial..(nb.element + 1) * c.n_radial];
            block.iter_mut().zip(&nb.radial).for_each(|(o, v)| *o += v);
        }

        if c.include_three_body {
            let base = self.vocabulary.len() * c.n_radial;
            let mut cheb = vec![0.0; c.n_angular];
            for (a, nj) in neighbors.iter().enumerate() {
                for nk in &neighbors[a + 1..] {
                    let cos = nj.unit.dot(&nk.unit).clamp(-1.0, 1.0);
                    chebyshev(cos, &mut cheb);
                    let pair = self.pair_index(nj.element, nk.element);
                    for (p, tp) in cheb.iter().enumerate() {
                        let off = base + (pair * c.n_angular + p) * c.n_radial;
                        for m in 0..c.n_radial {
                            out[off + m] += tp * nj.radial[m] * nk.radial[m];
                        }
                    }
                }
            }
        }
        Ok(FeatureVector(out))
    }

    /// Features of every atom, in atom order.
    pub fn all_features(
        &self,
        geom: &MolecularGeometry,
    ) -> Result<Vec<FeatureVector>, GeometryError> {
        (0..geom.len()).map(|i| self.features(geom, i)).collect()
    }
}

fn chebyshev(x: f64, out: &mut [f64]) {
    for p in 0..out.len() {
        out[p] = match p {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * out[p - 1] - out[p - 2],
        };
    }
}

/// Features of `atom_index` with the vocabulary taken from `geom` itself.
pub fn invariant_features(
    geom: &MolecularGeometry,
    atom_index: usize,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, GeometryError> {
    let vocab = Featurizer::vocabulary_of([geom]);
    Featurizer::new(cfg.clone(), &vocab)?.features(geom, atom_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_rigid_motion, random_rigid_motion, Atom};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_geometry(rng: &mut impl Rng, n: usize) -> MolecularGeometry {
        let elements = ["H", "Li", "H", "C"];
        MolecularGeometry::new(
            (0..n)
                .map(|i| {
                    Atom::new(
                        elements[i % elements.len()],
                        std::array::from_fn(|_| rng.random_range(-2.5..2.5)),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn isolated_atom_has_zero_features() {
        let g = MolecularGeometry::new(vec![
            Atom::new("H", [0.0; 3]),
            Atom::new("H", [9.0, 0.0, 0.0]),
        ])
        .unwrap();
        let f = invariant_features(&g, 0, &FeatureConfig::default()).unwrap();
        assert!(f.0.iter().all(|&x| x == 0.0));
        assert!(invariant_features(&g, 2, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn features_are_invariant_under_rigid_motions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = FeatureConfig::default();
        for trial in 0..100 {
            let g = random_geometry(&mut rng, 5);
            let moved = apply_rigid_motion(&g, &random_rigid_motion(trial)).unwrap();
            let fz = Featurizer::new(cfg.clone(), &Featurizer::vocabulary_of([&g])).unwrap();
            for i in 0..g.len() {
                let a = fz.features(&g, i).unwrap();
                let b = fz.features(&moved, i).unwrap();
                for (x, y) in a.0.iter().zip(&b.0) {
                    assert!((x - y).abs() < 1e-12, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn relabeling_atoms_permutes_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_geometry(&mut rng, 5);
        let perm = [3, 0, 4, 2, 1];
        let p = g.permuted(&perm).unwrap();
        let fz =
            Featurizer::new(FeatureConfig::default(), &Featurizer::vocabulary_of([&g])).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            let a = fz.features(&p, new).unwrap();
            let b = fz.features(&g, old).unwrap();
            for (x, y) in a.0.iter().zip(&b.0) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn features_vanish_smoothly_at_cutoff() {
        let cfg = FeatureConfig::default();
        let feat = |r: f64| {
            let g = MolecularGeometry::new(vec![
                Atom::new("H", [0.0; 3]),
                Atom::new("H", [r, 0.0, 0.0]),
            ])
            .unwrap();
            invariant_features(&g, 0, &cfg).unwrap().0
        };
        let peak = (1..500)
            .map(|k| {
                feat(k as f64 * 0.01)
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .fold(0.0, f64::max);
        let edge = feat(cfg.r_cut - 1e-6)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(edge < 1e-8 * peak, "edge {edge} peak {peak}");
    }

    #[test]
    fn three_body_terms_separate_equal_radial_environments() {
        // Same center-neighbor distances (1.2 A), different bond angles:
        // trigonal planar versus a pyramid.
        let r = 1.2;
        let planar = MolecularGeometry::new(
            std::iter::once(Atom::new("H", [0.0; 3]))
                .chain((0..3).map(|k| {
                    let a = 2.0 * PI * k as f64 / 3.0;
                    Atom::new("H", [r * a.cos(), r * a.sin(), 0.0])
                }))
                .collect(),
        )
        .unwrap();
        let pyramid = MolecularGeometry::new(
            std::iter::once(Atom::new("H", [0.0; 3]))
                .chain((0..3).map(|k| {
                    let a = 2.0 * PI * k as f64 / 3.0;
                    let (s, z) = (0.8 * r, (r * r - 0.64 * r * r).sqrt());
                    Atom::new("H", [s * a.cos(), s * a.sin(), z])
                }))
                .collect(),
        )
        .unwrap();
        let two_body = FeatureConfig {
            include_three_body: false,
            ..FeatureConfig::default()
        };
        let a2 = invariant_features(&planar, 0, &two_body).unwrap();
        let b2 = invariant_features(&pyramid, 0, &two_body).unwrap();
        for (x, y) in a2.0.iter().zip(&b2.0) {
            assert!((x - y).abs() < 1e-12);
        }
        let a3 = invariant_features(&planar, 0, &FeatureConfig::default()).unwrap();
        let b3 = invariant_features(&pyramid, 0, &FeatureConfig::default()).unwrap();
        let diff =
            a3.0.iter()
                .zip(&b3.0)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
        assert!(
            diff > 1e-3,
            "three-body features failed to separate: {diff}"
        );
    }

    #[test]
    fn vocabulary_is_ordered_by_atomic_number() {
        let fz = Featurizer::new(
            FeatureConfig::default(),
            &["Li".into(), "H".into(), "Li".into()],
        )
        .unwrap();
        assert_eq!(fz.vocabulary(), &["H".to_string(), "Li".to_string()]);
        assert_eq!(fz.len(), 2 * 8 + 3 * 4 * 8);
        assert!(Featurizer::new(FeatureConfig::default(), &["Qq".into()]).is_err());
    }
}
