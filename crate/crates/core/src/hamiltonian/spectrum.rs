use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HamiltonianError, QubitHamiltonian, DEFAULT_QUBIT_CAP};
use crate::circuit::Statevector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Largest register accepted at all.
    pub qubit_cap: usize,
    /// Registers up to this size use dense diagonalization; larger ones use Lanczos.
    pub dense_max_qubits: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual tolerance relative to `sum |c_k|`.
    pub rel_tol: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            qubit_cap: DEFAULT_QUBIT_CAP,
            dense_max_qubits: 10,
            krylov_dim: 160,
            max_restarts: 30,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub ground_energy: f64,
    pub ground_state: Statevector,
    /// `E_1 - E_0` when the dense path computed the full spectrum.
    pub gap: Option<f64>,
}

/// Lowest eigenpair with default settings.
pub fn exact_ground_state(h: &QubitHamiltonian) -> Result<SpectrumResult, HamiltonianError> {
    h.ground_state(&SpectrumConfig::default())
}

impl QubitHamiltonian {
    pub fn ground_state(&self, cfg: &SpectrumConfig) -> Result<SpectrumResult, HamiltonianError> {
        if self.n_qubits() > cfg.qubit_cap {
            return Err(HamiltonianError::CapExceeded {
                n_qubits: self.n_qubits(),
                cap: cfg.qubit_cap,
            });
        }
        let (energy, amps, gap) = if self.n_qubits() <= cfg.dense_max_qubits {
            self.dense_ground()
        } else {
            self.lanczos_ground(cfg)?
        };
        let mut state = Statevector::from_amplitudes(amps).expect("power-of-two length");
        state.normalize();
        state.fix_global_phase();

        let residual = self.residual(&state, energy);
        let tol = cfg.rel_tol * self.norm_bound().max(1.0);
        if residual > tol {
            return Err(HamiltonianError::NoConvergence {
                residual,
                iterations: cfg.krylov_dim * cfg.max_restarts,
            });
        }
        Ok(SpectrumResult {
            ground_energy: energy,
            ground_state: state,
            gap,
        })
    }

    fn residual(&self, psi: &Statevector, energy: f64) -> f64 {
        let mut hpsi = vec![Complex64::new(0.0, 0.0); psi.dim()];
        self.apply_into(psi.amplitudes(), &mut hpsi);
        hpsi.iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| (a - b * energy).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn dense_ground(&self) -> (f64, Vec<Complex64>, Option<f64>) {
        let dim = self.dim();
        let dense = self.to_dense();
        if self.is_real() {
            let m = DMatrix::from_fn(dim, dim, |r, c| dense[r][c].re);
            let eig = SymmetricEigen::new(m);
            let (lo, gap) = lowest_two(eig.eigenvalues.as_slice());
            let v = eig
                .eigenvectors
                .column(lo)
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect();
            (eig.eigenvalues[lo], v, gap)
        } else {
            let m = DMatrix::from_fn(dim, dim, |r, c| dense[r][c]);
            let eig = SymmetricEigen::new(m);
            let (lo, gap) = lowest_two(eig.eigenvalues.as_slice());
            let v = eig.eigenvectors.column(lo).iter().copied().collect();
            (eig.eigenvalues[lo], v, gap)
        }
    }

    /// Restarted Lanczos with full reorthogonalization; restarts from the best Ritz vector.
    fn lanczos_ground(
        &self,
        cfg: &SpectrumConfig,
    ) -> Result<(f64, Vec<Complex64>, Option<f64>), HamiltonianError> {
        let dim = self.dim();
        let tol = cfg.rel_tol * self.norm_bound().max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_05e7);
        let mut start: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        normalize(&mut start);

        let kmax = cfg.krylov_dim.min(dim);
        let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        for _ in 0..cfg.max_restarts {
            let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
            let mut alphas: Vec<f64> = Vec::with_capacity(kmax);
            let mut betas: Vec<f64> = Vec::with_capacity(kmax);
            for j in 0..kmax {
                self.apply_into(&basis[j], &mut w);
                let alpha = dot(&basis[j], &w).re;
                alphas.push(alpha);
                // Two Gram-Schmidt passes against the whole basis.
                for _ in 0..2 {
                    for v in &basis {
                        let proj = dot(v, &w);
                        w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= proj * vi);
                    }
                }
                let beta = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if j + 1 == kmax || beta < 1e-12 * self.norm_bound().max(1.0) {
                    break;
                }
                betas.push(beta);
                basis.push(w.iter().map(|x| x / beta).collect());
            }
            let m = alphas.len();
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (lo, _) = lowest_two(eig.eigenvalues.as_slice());
            let theta = eig.eigenvalues[lo];
            let y = eig.eigenvectors.column(lo);
            let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
            for (coef, v) in y.iter().zip(&basis) {
                ritz.iter_mut().zip(v).for_each(|(r, vi)| *r += vi * *coef);
            }
            normalize(&mut ritz);
            let psi = Statevector::from_amplitudes(ritz.clone()).expect("power-of-two length");
            let res = self.residual(&psi, theta);
            if res < best.2 {
                best = (theta, ritz.clone(), res);
            }
            if res <= tol {
                break;
            }
            start = ritz;
        }
        Ok((best.0, best.1, None))
    }
}

fn lowest_two(vals: &[f64]) -> (usize, Option<f64>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let gap = order.get(1).map(|&i| vals[i] - vals[order[0]]);
    (order[0], gap)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::tests::random_hamiltonian;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn single_qubit_ground_states() {
        let z = QubitHamiltonian::from_terms(1, vec![(1.0, "Z0")]).unwrap();
        let r = exact_ground_state(&z).unwrap();
        assert!((r.ground_energy + 1.0).abs() < 1e-14);
        assert!((r.ground_state.amplitudes()[1].re - 1.0).abs() < 1e-14);
        assert!((r.gap.unwrap() - 2.0).abs() < 1e-14);

        let x = QubitHamiltonian::from_terms(1, vec![(1.0, "X0")]).unwrap();
        let r = exact_ground_state(&x).unwrap();
        assert!((r.ground_energy + 1.0).abs() < 1e-14);
        assert!((r.ground_state.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((r.ground_state.amplitudes()[1].re + FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn complex_hamiltonian_uses_hermitian_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_hamiltonian(3, 7, &mut rng);
        let r = exact_ground_state(&h).unwrap();
        let e = h.expectation(&r.ground_state).unwrap();
        assert!((e - r.ground_energy).abs() < 1e-9);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let h = random_hamiltonian(7, 20, &mut rng);
            let dense = exact_ground_state(&h).unwrap();
            let cfg = SpectrumConfig {
                dense_max_qubits: 0,
                ..SpectrumConfig::default()
            };
            let lanczos = h.ground_state(&cfg).unwrap();
            assert!((dense.ground_energy - lanczos.ground_energy).abs() < 1e-10);
            assert!(lanczos.gap.is_none());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let h = QubitHamiltonian::from_terms(16, vec![(1.0, "Z15")]).unwrap();
        assert!(matches!(
            exact_ground_state(&h),
            Err(HamiltonianError::CapExceeded { .. })
        ));
    }
}
