use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{num, variance_with_stderr, BasinEnsemble, CsvTable, DiagnosticsError};
use crate::circuit::{self, AngleSlot, AnsatzSpec};
use crate::hamiltonian::{HamiltonianError, QubitHamiltonian};

/// Initialization ensemble for a variance scan.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Every angle uniform on `(-pi, pi]`.
    UniformRandom,
    /// One basin ensemble per scanned size, in the order of `sizes`.
    Basin(Vec<BasinEnsemble>),
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::UniformRandom => "uniform_random",
            Ensemble::Basin(_) => "basin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVarianceRow {
    pub n_qubits: usize,
    pub ensemble: String,
    pub parameter: usize,
    pub variance: f64,
    pub stderr: f64,
    pub dim: usize,
    /// Basin ensembles: `H_kk^2 * Sigma_kk`.
    pub diagonal_prediction: Option<f64>,
    /// Basin ensembles: `sum_j H_kj^2 * Sigma_jj`, the linear-response variance.
    pub linear_prediction: Option<f64>,
}

impl GradientVarianceRow {
    pub fn table(rows: &[Self]) -> CsvTable {
        let mut t = CsvTable::new(&[
            "n_qubits",
            "ensemble",
            "parameter",
            "variance",
            "stderr",
            "d",
            "diagonal_prediction",
            "linear_prediction",
        ]);
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for r in rows {
            t.push(vec![
                r.n_qubits.to_string(),
                r.ensemble.clone(),
                r.parameter.to_string(),
                num(r.variance),
                num(r.stderr),
                r.dim.to_string(),
                opt(r.diagonal_prediction),
                opt(r.linear_prediction),
            ]);
        }
        t
    }
}

/// `Ry` angle of the middle qubit in the middle rotation layer.
pub fn central_parameter(spec: &AnsatzSpec) -> usize {
    spec.index(spec.n_qubits / 2, spec.layers() / 2, AngleSlot::Y)
}

fn gradient_entry(spec: &AnsatzSpec, theta: &[f64], h: &QubitHamiltonian, k: usize) -> f64 {
    0.5 * (circuit::shifted_energy(spec, theta, h, &[(k, FRAC_PI_2)])
        - circuit::shifted_energy(spec, theta, h, &[(k, -FRAC_PI_2)]))
}

fn hessian_row(spec: &AnsatzSpec, theta: &[f64], h: &QubitHamiltonian, k: usize) -> Vec<f64> {
    (0..theta.len())
        .into_par_iter()
        .map(|j| {
            if j == k {
                let e0 = circuit::shifted_energy(spec, theta, h, &[]);
                let plus = circuit::shifted_energy(spec, theta, h, &[(k, PI)]);
                let minus = circuit::shifted_energy(spec, theta, h, &[(k, -PI)]);
                0.25 * (plus - 2.0 * e0 + minus)
            } else {
                circuit::hessian_entry(spec, theta, h, k, j)
            }
        })
        .collect()
}

fn sample_rng(seed: u64, index: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
    rng.set_stream(stream);
    rng
}

/// Variance of the central gradient component over each ensemble for each size.
///
/// `h_builder(n)` supplies the observable on `n` qubits.
pub fn gradient_variance_scan<B>(
    sizes: &[usize],
    depth: usize,
    h_builder: B,
    ensembles: &[Ensemble],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<GradientVarianceRow>, DiagnosticsError>
where
    B: Fn(usize) -> Result<QubitHamiltonian, HamiltonianError>,
{
    if n_samples < 2 {
        return Err(DiagnosticsError::InvalidInput(format!(
            "variance needs at least 2 samples, got {n_samples}"
        )));
    }
    for e in ensembles {
        if let Ensemble::Basin(list) = e {
            if list.len() != sizes.len() {
                return Err(DiagnosticsError::InvalidInput(format!(
                    "basin ensemble has {} centers for {} sizes",
                    list.len(),
                    sizes.len()
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        let spec = AnsatzSpec::new(n, depth)?;
        let h = h_builder(n)?;
        spec.check_hamiltonian(&h)?;
        let k = central_parameter(&spec);
        let p = spec.param_count();
        for (ei, ens) in ensembles.iter().enumerate() {
            let stream = (si as u64) << 8 | ei as u64;
            let (samples, diag, linear) = match ens {
                Ensemble::UniformRandom => {
                    let g: Vec<f64> = (0..n_samples)
                        .into_par_iter()
                        .map(|i| {
                            let mut rng = sample_rng(seed, i, stream);
                            let theta: Vec<f64> = (0..p)
                                .map(|_| PI - rng.random_range(0.0..2.0 * PI))
                                .collect();
                            gradient_entry(&spec, &theta, &h, k)
                        })
                        .collect();
                    (g, None, None)
                }
                Ensemble::Basin(list) => {
                    let basin = &list[si];
                    spec.check_params(basin.center.as_slice())?;
                    let var = basin.variances()?;
                    let center = basin.center.as_slice();
                    let g: Vec<f64> = (0..n_samples)
                        .into_par_iter()
                        .map(|i| {
                            let mut rng = sample_rng(seed, i, stream);
                            let theta: Vec<f64> = center
                                .iter()
                                .zip(&var)
                                .map(|(c, s)| {
                                    c + s.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal)
                                })
                                .collect();
                            gradient_entry(&spec, &theta, &h, k)
                        })
                        .collect();
                    let row = hessian_row(&spec, center, &h, k);
                    let linear = row.iter().zip(&var).map(|(hk, s)| hk * hk * s).sum();
                    (g, Some(row[k] * row[k] * var[k]), Some(linear))
                }
            };
            let (variance, stderr) = variance_with_stderr(&samples);
            rows.push(GradientVarianceRow {
                n_qubits: n,
                ensemble: ens.name().to_string(),
                parameter: k,
                variance,
                stderr,
                dim: 1 << n,
                diagonal_prediction: diag,
                linear_prediction: linear,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log2(variance)` against qubit count.
pub fn log2_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBoundsReport {
    pub gradient_norm: f64,
    /// Smallest and largest Hessian eigenvalue above `tol_zero`.
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub n_redundant: usize,
    /// Extreme eigenvalues of the covariance.
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Squared norm of `u` projected on the non-redundant eigenvectors.
    pub nonredundant_weight: f64,
    /// Empirical `Var(u . grad E)`.
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
    /// `u` lies in the redundant subspace; only the upper bound
    /// `10 * tol_zero^2 * sigma_max` is checked.
    pub redundant_direction: bool,
    pub holds: bool,
}

/// Checks `kappa_m^2 sigma_min w / 2 <= Var(u . grad E) <= 2 kappa_M^2 sigma_max`
/// around a stationary point, where `w` is the non-redundant weight of `u`.
pub fn curvature_bounds_check(
    spec: &AnsatzSpec,
    ensemble: &BasinEnsemble,
    h: &QubitHamiltonian,
    n_samples: usize,
    u: &[f64],
    seed: u64,
    tol_zero: f64,
) -> Result<CurvatureBoundsReport, DiagnosticsError> {
    let center = ensemble.center.as_slice();
    spec.check_params(center)?;
    spec.check_params(u)?;
    spec.check_hamiltonian(h)?;
    if n_samples < 2 {
        return Err(DiagnosticsError::InvalidInput(
            "need at least 2 samples".into(),
        ));
    }
    let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm_u - 1.0).abs() > 1e-8 {
        return Err(DiagnosticsError::InvalidInput(format!(
            "direction norm {norm_u} is not 1"
        )));
    }
    let var = ensemble.variances()?;
    let grad = circuit::gradient(spec, center, h)?;
    let gradient_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gradient_norm >= 1e-6 {
        return Err(DiagnosticsError::NotStationary(gradient_norm));
    }
    let hess: DMatrix<f64> = circuit::hessian(spec, center, h)?;
    let eig = SymmetricEigen::new(hess);
    let mut kept = Vec::new();
    let mut weight = 0.0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > tol_zero {
            kept.push(lam);
            let c: f64 = eig
                .eigenvectors
                .column(i)
                .iter()
                .zip(u)
                .map(|(a, b)| a * b)
                .sum();
            weight += c * c;
        }
    }
    if kept.is_empty() {
        return Err(DiagnosticsError::AllRedundant);
    }
    let kappa_min = kept.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa_max = kept.iter().copied().fold(0.0, f64::max);
    let sigma_min = var.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma_max = var.iter().copied().fold(0.0, f64::max);

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let proj: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i, 0);
            let theta: Vec<f64> = center
                .iter()
                .zip(&var)
                .map(|(c, s)| c + s.sqrt() * normal.sample(&mut rng))
                .collect();
            let g = circuit::gradient(spec, &theta, h).expect("checked dimensions");
            g.iter().zip(u).map(|(a, b)| a * b).sum()
        })
        .collect();
    let (variance, _) = variance_with_stderr(&proj);
    let redundant_direction = weight < 1e-6;
    let (lower, upper) = if redundant_direction {
        (0.0, 10.0 * tol_zero * tol_zero * sigma_max)
    } else {
        (
            0.5 * kappa_min * kappa_min * sigma_min * weight,
            2.0 * kappa_max * kappa_max * sigma_max,
        )
    };
    Ok(CurvatureBoundsReport {
        gradient_norm,
        kappa_min,
        kappa_max,
        n_redundant: eig.eigenvalues.len() - kept.len(),
        sigma_min,
        sigma_max,
        nonredundant_weight: weight,
        variance,
        lower,
        upper,
        redundant_direction,
        holds: lower <= variance && variance <= upper,
    })
}
