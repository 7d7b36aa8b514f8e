//! Local and global optimizers for circuit parameters, plus the AdamW trainer
//! used by the preconditioner.
//!
//! The generic minimizers work on plain `&[f64]` objectives; the `circuit_*`
//! helpers bind them to an ansatz and Hamiltonian and wrap the returned angles.

mod adamw;
mod basin;
mod lbfgs;
mod spsa;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, AnsatzSpec, CircuitError, ParameterVector};
use crate::hamiltonian::QubitHamiltonian;

pub use adamw::{
    decayed_weight_gradient_step, learning_rate, AdamState, StepOutcome, TrainOptimConfig,
};
pub use basin::{basin_hopping, BasinHoppingConfig};
pub use lbfgs::{minimize_lbfgs, LbfgsConfig};
pub use spsa::{minimize_spsa, spsa_gradient_estimate, SpsaConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("objective returned {value} at evaluation {evaluation}")]
    NonFinite { evaluation: usize, value: f64 },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient has length {got}, expected {expected}")]
    GradientLength { expected: usize, got: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxEvals,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    /// `(evaluation_count, energy)` at accepted iterates.
    pub trace: Vec<(usize, f64)>,
    pub final_parameters: ParameterVector,
    pub final_energy: f64,
    pub termination: Termination,
    pub evaluations_used: usize,
    /// Line-search failures replaced by a steepest-descent step (L-BFGS), skipped
    /// steps (SPSA) or skipped hops (basin hopping).
    pub recoveries: usize,
}

/// Adds `Normal(0, variance / n_shots)` noise to every call of `objective`.
pub fn shot_noise_wrapper<F>(
    mut objective: F,
    variance: f64,
    n_shots: u64,
    seed: u64,
) -> Result<impl FnMut(&[f64]) -> f64, OptimError>
where
    F: FnMut(&[f64]) -> f64,
{
    if n_shots == 0 {
        return Err(OptimError::InvalidConfig("n_shots must be >= 1".into()));
    }
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(OptimError::InvalidConfig(format!(
            "variance must be finite and >= 0, got {variance}"
        )));
    }
    let sd = (variance / n_shots as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(move |theta: &[f64]| {
        let noise: f64 = normal.sample(&mut rng);
        objective(theta) + sd * noise
    })
}

fn wrap_report(mut report: OptimizerReport) -> OptimizerReport {
    report.final_parameters = report.final_parameters.wrapped();
    report
}

/// L-BFGS on the circuit energy with parameter-shift gradients.
pub fn circuit_lbfgs(
    spec: &AnsatzSpec,
    h: &QubitHamiltonian,
    theta0: &[f64],
    cfg: &LbfgsConfig,
) -> Result<OptimizerReport, OptimError> {
    spec.check_params(theta0)?;
    spec.check_hamiltonian(h)?;
    let report = minimize_lbfgs(
        |t| circuit::energy_unchecked(spec, t, h),
        |t| circuit::gradient(spec, t, h).expect("checked dimensions"),
        theta0,
        cfg,
    )?;
    Ok(wrap_report(report))
}

/// Basin hopping on the circuit energy.
pub fn circuit_basin_hopping(
    spec: &AnsatzSpec,
    h: &QubitHamiltonian,
    theta0: &[f64],
    cfg: &BasinHoppingConfig,
) -> Result<OptimizerReport, OptimError> {
    spec.check_params(theta0)?;
    spec.check_hamiltonian(h)?;
    let report = basin_hopping(
        |t: &[f64]| circuit::energy_unchecked(spec, t, h),
        |t: &[f64]| circuit::gradient(spec, t, h).expect("checked dimensions"),
        theta0,
        cfg,
    )?;
    Ok(wrap_report(report))
}

/// SPSA on the circuit energy, optionally with shot noise `(variance, n_shots)`.
pub fn circuit_spsa(
    spec: &AnsatzSpec,
    h: &QubitHamiltonian,
    theta0: &[f64],
    cfg: &SpsaConfig,
    shot_noise: Option<(f64, u64)>,
) -> Result<OptimizerReport, OptimError> {
    spec.check_params(theta0)?;
    spec.check_hamiltonian(h)?;
    let exact = |t: &[f64]| circuit::energy_unchecked(spec, t, h);
    let report = match shot_noise {
        Some((var, shots)) => {
            let noisy = shot_noise_wrapper(exact, var, shots, cfg.seed ^ 0x5a5a_5a5a)?;
            minimize_spsa(noisy, theta0, cfg)?
        }
        None => minimize_spsa(exact, theta0, cfg)?,
    };
    Ok(wrap_report(report))
}

fn check_finite(evaluation: usize, value: f64) -> Result<f64, OptimError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(OptimError::NonFinite { evaluation, value })
    }
}
