//! Brick-wall hardware-efficient ansatz on a dense statevector.
//!
//! The circuit acting on `|0...0>` is an initial layer of `Ry(theta) Rz(phi)`
//! rotations on every qubit followed by `depth` blocks, each made of the same
//! rotation layer and then the brick-wall CNOT entangler (even pairs first,
//! then odd pairs, open boundary). Rotations use `R_P(a) = exp(-i a P / 2)`.
//!
//! Flat parameter layout: `index(qubit, layer, slot) = 2 * (layer * n + qubit) + slot`
//! with slot 0 the `Ry` angle and slot 1 the `Rz` angle.

mod derivatives;
mod state;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::QubitHamiltonian;

pub use derivatives::{gradient, hessian, hessian_entry, shifted_energy};
pub use state::{ry_rz, Statevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("parameter vector has length {got}, ansatz expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("ansatz acts on {ansatz} qubits but the Hamiltonian has {hamiltonian}")]
    DimensionMismatch { ansatz: usize, hamiltonian: usize },
    #[error("statevector length {0} is not a power of two")]
    InvalidStateLength(usize),
    #[error("ansatz needs at least one qubit")]
    NoQubits,
    #[error("parameter {0} is not finite")]
    NonFinite(usize),
}

/// Which rotation a parameter drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AngleSlot {
    Y,
    Z,
}

impl AngleSlot {
    fn offset(self) -> usize {
        match self {
            AngleSlot::Y => 0,
            AngleSlot::Z => 1,
        }
    }
}

/// Shape of the ansatz: qubit count and number of entangling blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub depth: usize,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, depth: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(Self { n_qubits, depth })
    }

    pub fn param_count(&self) -> usize {
        param_count(self.n_qubits, self.depth)
    }

    /// Number of rotation layers, including the initial one.
    pub fn layers(&self) -> usize {
        self.depth + 1
    }

    pub fn index(&self, qubit: usize, layer: usize, slot: AngleSlot) -> usize {
        debug_assert!(qubit < self.n_qubits && layer <= self.depth);
        2 * (layer * self.n_qubits + qubit) + slot.offset()
    }

    /// Inverse of [`AnsatzSpec::index`].
    pub fn locate(&self, index: usize) -> (usize, usize, AngleSlot) {
        let slot = if index % 2 == 0 {
            AngleSlot::Y
        } else {
            AngleSlot::Z
        };
        let site = index / 2;
        (site % self.n_qubits, site / self.n_qubits, slot)
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<(), CircuitError> {
        let expected = self.param_count();
        if theta.len() != expected {
            return Err(CircuitError::LengthMismatch {
                expected,
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn check_hamiltonian(&self, h: &QubitHamiltonian) -> Result<(), CircuitError> {
        if h.n_qubits() != self.n_qubits {
            return Err(CircuitError::DimensionMismatch {
                ansatz: self.n_qubits,
                hamiltonian: h.n_qubits(),
            });
        }
        Ok(())
    }
}

/// `2 N (L + 1)`: two angles per qubit per rotation layer.
pub fn param_count(n_qubits: usize, depth: usize) -> usize {
    2 * n_qubits * (depth + 1)
}

/// Rotation angles in radians, laid out by [`AnsatzSpec::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self, CircuitError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CircuitError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical representative with every angle in `(-pi, pi]`.
    pub fn wrapped(&self) -> Self {
        Self(self.0.iter().map(|&v| wrap_angle(v)).collect())
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(v: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = v.rem_euclid(two_pi);
    if r > PI {
        r -= two_pi;
    }
    r
}

fn rotation_layer(psi: &mut Statevector, spec: &AnsatzSpec, theta: &[f64], layer: usize) {
    for q in 0..spec.n_qubits {
        let ty = theta[spec.index(q, layer, AngleSlot::Y)];
        let tz = theta[spec.index(q, layer, AngleSlot::Z)];
        if ty == 0.0 && tz == 0.0 {
            continue;
        }
        psi.apply_single(q, &ry_rz(ty, tz));
    }
}

/// Brick-wall CNOT layer in place: `CNOT(i, i+1)` for even `i`, then for odd `i`.
pub fn apply_entangling_layer(psi: &mut Statevector) {
    let n = psi.n_qubits();
    for start in [0, 1] {
        let mut i = start;
        while i + 1 < n {
            psi.apply_cnot(i, i + 1);
            i += 2;
        }
    }
}

/// Returns the entangled copy of `psi`; see [`apply_entangling_layer`].
pub fn entangling_layer(psi: &Statevector) -> Statevector {
    let mut out = psi.clone();
    apply_entangling_layer(&mut out);
    out
}

/// Basis-state permutation implemented by one entangling layer, acting on bit lists.
pub fn entangle_bits(bits: &mut [u8]) {
    let n = bits.len();
    for start in [0, 1] {
        let mut i = start;
        while i + 1 < n {
            bits[i + 1] ^= bits[i];
            i += 2;
        }
    }
}

/// Inverse of [`entangle_bits`]: odd pass first, then even.
pub fn disentangle_bits(bits: &mut [u8]) {
    let n = bits.len();
    for start in [1, 0] {
        let mut i = start;
        while i + 1 < n {
            bits[i + 1] ^= bits[i];
            i += 2;
        }
    }
}

pub fn prepare_state(spec: &AnsatzSpec, theta: &[f64]) -> Result<Statevector, CircuitError> {
    spec.check_params(theta)?;
    Ok(prepare_unchecked(spec, theta))
}

pub(crate) fn prepare_unchecked(spec: &AnsatzSpec, theta: &[f64]) -> Statevector {
    let mut psi = Statevector::zero_state(spec.n_qubits);
    rotation_layer(&mut psi, spec, theta, 0);
    for layer in 1..=spec.depth {
        rotation_layer(&mut psi, spec, theta, layer);
        apply_entangling_layer(&mut psi);
    }
    psi
}

/// `<psi(theta)| H |psi(theta)>`.
pub fn energy(spec: &AnsatzSpec, theta: &[f64], h: &QubitHamiltonian) -> Result<f64, CircuitError> {
    spec.check_params(theta)?;
    spec.check_hamiltonian(h)?;
    Ok(energy_unchecked(spec, theta, h))
}

pub(crate) fn energy_unchecked(spec: &AnsatzSpec, theta: &[f64], h: &QubitHamiltonian) -> f64 {
    h.expectation_unchecked(&prepare_unchecked(spec, theta))
}

/// `|<psi(a)|psi(b)>|^2`.
pub fn fidelity(spec: &AnsatzSpec, a: &[f64], b: &[f64]) -> Result<f64, CircuitError> {
    spec.check_params(a)?;
    spec.check_params(b)?;
    let pa = prepare_unchecked(spec, a);
    let pb = prepare_unchecked(spec, b);
    Ok(pa.inner(&pb).norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::QubitHamiltonian;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Mat = Vec<Vec<Complex64>>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let n = a.len();
        let mut out = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn kron(a: &Mat, b: &Mat) -> Mat {
        let (na, nb) = (a.len(), b.len());
        let mut out = vec![vec![c(0.0, 0.0); na * nb]; na * nb];
        for i in 0..na {
            for j in 0..na {
                for k in 0..nb {
                    for l in 0..nb {
                        out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn eye(n: usize) -> Mat {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect()
    }

    /// Single-qubit gate on qubit q of an n-qubit register, qubit 0 least significant.
    fn embed(u: &Mat, q: usize, n: usize) -> Mat {
        let id = eye(2);
        let mut out = eye(1);
        for k in (0..n).rev() {
            out = kron(&out, if k == q { u } else { &id });
        }
        out
    }

    fn cnot_matrix(ctrl: usize, tgt: usize, n: usize) -> Mat {
        let d = 1 << n;
        let mut m = vec![vec![c(0.0, 0.0); d]; d];
        for b in 0..d {
            let out = if b >> ctrl & 1 == 1 {
                b ^ (1 << tgt)
            } else {
                b
            };
            m[out][b] = c(1.0, 0.0);
        }
        m
    }

    fn ry(t: f64) -> Mat {
        let (s, co) = (t / 2.0).sin_cos();
        vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
    }

    fn rz(t: f64) -> Mat {
        vec![
            vec![Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
        ]
    }

    #[test]
    fn param_count_matches_formula() {
        assert_eq!(param_count(12, 4), 120);
        assert_eq!(param_count(1, 0), 2);
        assert_eq!(param_count(8, 4), 80);
    }

    #[test]
    fn layout_is_bijection() {
        let spec = AnsatzSpec::new(5, 3).unwrap();
        let mut seen = vec![false; spec.param_count()];
        for l in 0..=3 {
            for q in 0..5 {
                for slot in [AngleSlot::Y, AngleSlot::Z] {
                    let i = spec.index(q, l, slot);
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(spec.locate(i), (q, l, slot));
                }
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn single_qubit_states() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        let psi = prepare_state(&spec, &[0.0, 0.0]).unwrap();
        assert_eq!(psi, Statevector::zero_state(1));
        let psi = prepare_state(&spec, &[PI, 0.0]).unwrap();
        assert!(psi.amplitudes()[0].norm() < 1e-15);
        assert!((psi.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_circuit_matches_matrix_chain() {
        let spec = AnsatzSpec::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let theta: Vec<f64> = (0..spec.param_count())
                .map(|_| rng.random_range(-PI..PI))
                .collect();
            let mut u = eye(4);
            for layer in 0..=1 {
                for q in 0..2 {
                    let ty = theta[spec.index(q, layer, AngleSlot::Y)];
                    let tz = theta[spec.index(q, layer, AngleSlot::Z)];
                    u = matmul(&embed(&rz(tz), q, 2), &u);
                    u = matmul(&embed(&ry(ty), q, 2), &u);
                }
                if layer > 0 {
                    u = matmul(&cnot_matrix(0, 1, 2), &u);
                }
            }
            let psi = prepare_state(&spec, &theta).unwrap();
            for (b, row) in u.iter().enumerate() {
                assert!((psi.amplitudes()[b] - row[0]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn entangler_matches_cnot_permutation_oracle() {
        // |1010> written as qubit bits q0..q3 = [0, 1, 0, 1]
        for bits in [[0u8, 1, 0, 1], [1, 0, 1, 0], [1, 1, 0, 1]] {
            let psi = entangling_layer(&Statevector::basis_state(&bits));
            let mut idx = crate::circuit::state::bits_to_index(&bits);
            for (ctrl, tgt) in [(0, 1), (2, 3), (1, 2)] {
                if idx >> ctrl & 1 == 1 {
                    idx ^= 1 << tgt;
                }
            }
            assert!((psi.amplitudes()[idx].re - 1.0).abs() < 1e-15);
            let mut permuted = bits;
            entangle_bits(&mut permuted);
            assert_eq!(crate::circuit::state::bits_to_index(&permuted), idx);
            disentangle_bits(&mut permuted);
            assert_eq!(permuted, bits);
        }
    }

    #[test]
    fn single_qubit_energy_is_cosine() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        let h = QubitHamiltonian::from_terms(1, vec![(1.0, "Z0")]).unwrap();
        for (t, e) in [(0.0, 1.0), (PI / 2.0, 0.0), (PI, -1.0)] {
            assert!((energy(&spec, &[t, 0.0], &h).unwrap() - e).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_is_preserved_and_periodic() {
        let spec = AnsatzSpec::new(4, 3).unwrap();
        let h = QubitHamiltonian::from_terms(4, vec![(0.7, "X0 X1"), (-0.3, "Z2"), (0.2, "Y1 Y3")])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = (0..spec.param_count())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let psi = prepare_state(&spec, &theta).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let e0 = energy(&spec, &theta, &h).unwrap();
        for k in [0, 7, spec.param_count() - 1] {
            let mut shifted = theta.clone();
            shifted[k] += 2.0 * PI;
            assert!((energy(&spec, &shifted, &h).unwrap() - e0).abs() < 1e-12);
            assert!((fidelity(&spec, &theta, &shifted).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_endpoints() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        assert!((fidelity(&spec, &[0.3, 0.1], &[0.3, 0.1]).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&spec, &[0.0, 0.0], &[PI, 0.0]).unwrap() < 1e-15);
        assert!(matches!(
            fidelity(&spec, &[0.0], &[0.0, 0.0]),
            Err(CircuitError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
    }
}
