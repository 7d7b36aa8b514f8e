use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Atom, GeometryError, MolecularGeometry};

/// Element of SE(3): `r -> R r + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl RigidMotion {
    pub fn new(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self, GeometryError> {
        let m = Self {
            rotation,
            translation,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn translation_only(t: [f64; 3]) -> Self {
        Self {
            translation: t,
            ..Self::identity()
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.rotation[r][c])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let r = self.rotation_matrix();
        if r.iter()
            .chain(self.translation.iter())
            .any(|x| !x.is_finite())
        {
            return Err(GeometryError::InvalidMotion("non-finite entry".into()));
        }
        let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
        if dev > 1e-12 {
            return Err(GeometryError::InvalidMotion(format!(
                "|R^T R - I| = {dev:e}"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > 1e-12 {
            return Err(GeometryError::InvalidMotion(format!("det R = {det}")));
        }
        Ok(())
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation_matrix() * Vector3::from(p) + self.translation();
        [v.x, v.y, v.z]
    }
}

pub fn apply_rigid_motion(
    geom: &MolecularGeometry,
    g: &RigidMotion,
) -> Result<MolecularGeometry, GeometryError> {
    g.validate()?;
    MolecularGeometry::new(
        geom.atoms()
            .iter()
            .map(|a| Atom::new(a.element.clone(), g.apply_point(a.position)))
            .collect(),
    )
}

/// Haar-random rotation from a normalized Gaussian quaternion, translation
/// uniform in `[-5, 5]^3` Angstrom.
pub fn random_rigid_motion(seed: u64) -> RigidMotion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = loop {
        let c: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let q = Quaternion::new(c[0], c[1], c[2], c[3]);
        if q.norm() > 1e-8 {
            break UnitQuaternion::from_quaternion(q);
        }
    };
    let r = q.to_rotation_matrix().into_inner();
    let translation = std::array::from_fn(|_| rng.random_range(-5.0..=5.0));
    RigidMotion {
        rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
        translation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h4() -> MolecularGeometry {
        MolecularGeometry::linear_chain("H", 4, 1.2).unwrap()
    }

    fn max_dist_diff(a: &MolecularGeometry, b: &MolecularGeometry) -> f64 {
        let (da, db) = (a.distance_matrix(), b.distance_matrix());
        da.iter()
            .flatten()
            .zip(db.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_and_translation() {
        let g = h4();
        assert_eq!(apply_rigid_motion(&g, &RigidMotion::identity()).unwrap(), g);
        let moved =
            apply_rigid_motion(&g, &RigidMotion::translation_only([1.0, -2.0, 3.5])).unwrap();
        assert!(max_dist_diff(&g, &moved) < 1e-12);
    }

    #[test]
    fn random_motions_are_valid_and_reproducible() {
        for seed in 0..200 {
            let m = random_rigid_motion(seed);
            m.validate().unwrap();
            assert_eq!(m, random_rigid_motion(seed));
            let moved = apply_rigid_motion(&h4(), &m).unwrap();
            assert!(max_dist_diff(&h4(), &moved) < 1e-12);
        }
    }

    #[test]
    fn rotation_entries_average_to_zero() {
        let n = 10_000;
        let mut sum = Matrix3::<f64>::zeros();
        for seed in 0..n {
            sum += random_rigid_motion(seed).rotation_matrix();
        }
        let mean = sum / n as f64;
        assert!(mean.abs().max() < 0.02, "{mean}");
    }

    #[test]
    fn rejects_reflections() {
        let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RigidMotion::new(refl, [0.0; 3]).is_err());
        let skew = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RigidMotion::new(skew, [0.0; 3]).is_err());
    }
}
