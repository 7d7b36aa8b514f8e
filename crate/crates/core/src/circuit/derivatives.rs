use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{energy_unchecked, AnsatzSpec, CircuitError};
use crate::hamiltonian::QubitHamiltonian;

/// Energy at `theta` with the listed `(index, shift)` offsets added.
pub fn shifted_energy(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
    shifts: &[(usize, f64)],
) -> f64 {
    let mut t = theta.to_vec();
    for &(k, s) in shifts {
        t[k] += s;
    }
    energy_unchecked(spec, &t, h)
}

/// Exact gradient by the two-point parameter-shift rule.
pub fn gradient(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
) -> Result<Vec<f64>, CircuitError> {
    spec.check_params(theta)?;
    spec.check_hamiltonian(h)?;
    Ok((0..theta.len())
        .into_par_iter()
        .map(|k| {
            let plus = shifted_energy(spec, theta, h, &[(k, FRAC_PI_2)]);
            let minus = shifted_energy(spec, theta, h, &[(k, -FRAC_PI_2)]);
            0.5 * (plus - minus)
        })
        .collect())
}

/// One double-shift entry, evaluated independently of its transpose partner.
pub fn hessian_entry(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
    j: usize,
    k: usize,
) -> f64 {
    let s = FRAC_PI_2;
    let pp = shifted_energy(spec, theta, h, &[(j, s), (k, s)]);
    let pm = shifted_energy(spec, theta, h, &[(j, s), (k, -s)]);
    let mp = shifted_energy(spec, theta, h, &[(j, -s), (k, s)]);
    let mm = shifted_energy(spec, theta, h, &[(j, -s), (k, -s)]);
    0.25 * (pp - pm - mp + mm)
}

/// Exact Hessian by the four-point double-shift rule.
///
/// Off-diagonal entries are computed once per unordered pair; the diagonal
/// reuses `E(theta)` and `E(theta +- pi e_j)`.
pub fn hessian(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
) -> Result<DMatrix<f64>, CircuitError> {
    spec.check_params(theta)?;
    spec.check_hamiltonian(h)?;
    let p = theta.len();
    let e0 = energy_unchecked(spec, theta, h);
    let diag: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|j| {
            let plus = shifted_energy(spec, theta, h, &[(j, 2.0 * FRAC_PI_2)]);
            let minus = shifted_energy(spec, theta, h, &[(j, -2.0 * FRAC_PI_2)]);
            0.25 * (plus - 2.0 * e0 + minus)
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| (j + 1..p).map(move |k| (j, k)))
        .collect();
    let off: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| hessian_entry(spec, theta, h, j, k))
        .collect();
    let mut m = DMatrix::zeros(p, p);
    for (j, d) in diag.into_iter().enumerate() {
        m[(j, j)] = d;
    }
    for (&(j, k), v) in pairs.iter().zip(off) {
        m[(j, k)] = v;
        m[(k, j)] = v;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::energy;
    use std::f64::consts::PI;

    fn z0() -> QubitHamiltonian {
        QubitHamiltonian::from_terms(1, vec![(1.0, "Z0")]).unwrap()
    }

    #[test]
    fn single_qubit_gradient_is_minus_sine() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        let g = gradient(&spec, &[PI / 2.0, 0.0], &z0()).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14);
        assert!(g[1].abs() < 1e-14);
    }

    #[test]
    fn single_qubit_hessian_at_maximum() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        let hm = hessian(&spec, &[0.0, 0.0], &z0()).unwrap();
        assert!((hm[(0, 0)] + 1.0).abs() < 1e-14);
        assert!(hm[(0, 1)].abs() < 1e-14);
        assert!(hm[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn gradient_checks_dimensions() {
        let spec = AnsatzSpec::new(2, 0).unwrap();
        assert!(matches!(
            gradient(&spec, &[0.0; 4], &z0()),
            Err(CircuitError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            energy(&spec, &[0.0; 3], &z0()),
            Err(CircuitError::LengthMismatch { .. })
        ));
    }
}
