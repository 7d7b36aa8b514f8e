use nalgebra::SymmetricEigen;

use super::DiagnosticsError;
use crate::circuit::{self, AnsatzSpec};
use crate::hamiltonian::QubitHamiltonian;

/// Cost guard on the number of parameters.
pub const HESSIAN_MAX_PARAMS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct HessianSpectrum {
    /// Ascending, Ha/rad².
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `-tol_neg`.
    pub n_negative: usize,
    /// Eigenvalues in `[-tol_zero, tol_zero]`.
    pub n_near_zero: usize,
    pub tol_neg: f64,
    pub tol_zero: f64,
}

impl HessianSpectrum {
    fn from_eigenvalues(eigenvalues: Vec<f64>, tol_neg: f64, tol_zero: f64) -> Self {
        Self {
            n_negative: eigenvalues.iter().filter(|&&v| v < -tol_neg).count(),
            n_near_zero: eigenvalues.iter().filter(|v| v.abs() <= tol_zero).count(),
            eigenvalues,
            tol_neg,
            tol_zero,
        }
    }

    pub fn to_table(&self) -> super::CsvTable {
        let mut t = super::CsvTable::new(&["index", "eigenvalue"]);
        for (i, v) in self.eigenvalues.iter().enumerate() {
            t.push(vec![i.to_string(), super::num(*v)]);
        }
        t
    }
}

/// Eigenvalues (ascending) and matching unit eigenvectors of the circuit Hessian.
pub fn hessian_eigenpairs(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), DiagnosticsError> {
    let p = spec.param_count();
    if p > HESSIAN_MAX_PARAMS {
        return Err(DiagnosticsError::Cap {
            what: "parameter count",
            value: p,
            cap: HESSIAN_MAX_PARAMS,
        });
    }
    let hess = circuit::hessian(spec, theta, h)?;
    let eig = SymmetricEigen::new(hess);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((values, vectors))
}

pub fn hessian_spectrum(
    spec: &AnsatzSpec,
    theta: &[f64],
    h: &QubitHamiltonian,
    tol_neg: f64,
    tol_zero: f64,
) -> Result<HessianSpectrum, DiagnosticsError> {
    if !(tol_neg >= 0.0 && tol_zero >= 0.0) {
        return Err(DiagnosticsError::InvalidInput(
            "tolerances must be >= 0".into(),
        ));
    }
    let (values, _) = hessian_eigenpairs(spec, theta, h)?;
    Ok(HessianSpectrum::from_eigenvalues(values, tol_neg, tol_zero))
}
