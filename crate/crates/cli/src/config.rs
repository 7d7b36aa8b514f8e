use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vqe_basin::geometry::FeatureConfig;
use vqe_basin::hamiltonian::ChainModelParams;
use vqe_basin::optim::{BasinHoppingConfig, LbfgsConfig, SpsaConfig};
use vqe_basin::precond::TrainConfig;

/// Whole run description. Every table rejects unknown keys.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub system: Option<SystemSection>,
    pub ansatz: Option<AnsatzSection>,
    pub init: Option<InitSection>,
    pub optimizer: Option<OptimizerSection>,
    pub lbfgs: Option<LbfgsConfig>,
    pub spsa: Option<SpsaConfig>,
    pub basin_hopping: Option<BasinHoppingConfig>,
    pub labels: Option<LabelsSection>,
    pub features: Option<FeatureConfig>,
    pub precond: Option<PrecondSection>,
    pub train: Option<TrainConfig>,
    pub gradvar: Option<GradvarSection>,
    pub hessian: Option<HessianSection>,
    pub tails: Option<TailsSection>,
    pub disorder: Option<DisorderSection>,
    pub landscape: Option<LandscapeSection>,
    pub shots: Option<ShotsSection>,
    pub benchmark: Option<BenchmarkSection>,
}

/// Hamiltonian source: an interchange file or the chain model on a geometry.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub hamiltonian: Option<PathBuf>,
    pub chain: Option<ChainSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    /// Geometry file; otherwise an evenly spaced chain along z.
    pub xyz: Option<PathBuf>,
    pub n_atoms: usize,
    /// Angstrom.
    pub spacing: f64,
    pub element: String,
    pub j0: f64,
    pub r0: f64,
    pub xi: f64,
    pub h: f64,
    pub r_cut: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        let p = ChainModelParams::default();
        Self {
            xyz: None,
            n_atoms: 4,
            spacing: 1.0,
            element: "H".into(),
            j0: p.j0,
            r0: p.r0,
            xi: p.xi,
            h: p.h,
            r_cut: p.r_cut,
        }
    }
}

impl ChainSection {
    pub fn params(&self) -> ChainModelParams {
        ChainModelParams {
            j0: self.j0,
            r0: self.r0,
            xi: self.xi,
            h: self.h,
            r_cut: self.r_cut,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    /// Checked against the Hamiltonian when given.
    pub n_qubits: Option<usize>,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Zeros,
    Random,
    Hf,
    Predict,
    File,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default)]
    pub kind: InitKind,
    /// JSON array of angles for `file`.
    pub params: Option<PathBuf>,
    /// Preconditioner checkpoint for `predict`.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Lbfgs,
    Spsa,
    #[serde(alias = "basin_hopping")]
    Basinhopping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerKind,
    /// SPSA only: `[variance, shots]` of the simulated measurement noise.
    pub shot_noise: Option<(f64, u64)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsSection {
    #[serde(default)]
    pub hamiltonians: Vec<PathBuf>,
    /// Chain-model geometries, built with `[system.chain]` parameters.
    #[serde(default)]
    pub xyz: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecondSection {
    pub labels: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub hidden: usize,
    /// Weight-initialization seed; the run seed when absent.
    pub model_seed: Option<u64>,
    /// Layers kept fixed by `precond-adapt`.
    pub frozen_layers: Vec<usize>,
}

impl Default for PrecondSection {
    fn default() -> Self {
        Self {
            labels: None,
            checkpoint: None,
            hidden: 32,
            model_seed: None,
            frozen_layers: vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradvarSection {
    pub sizes: Vec<usize>,
    pub depth: usize,
    pub n_samples: usize,
    /// Isotropic basin variance, rad².
    pub sigma2: f64,
    pub ensembles: Vec<String>,
}

impl Default for GradvarSection {
    fn default() -> Self {
        Self {
            sizes: vec![4, 6, 8, 10],
            depth: 4,
            n_samples: 2000,
            sigma2: 1e-4,
            ensembles: vec!["uniform_random".into(), "basin".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HessianSection {
    pub tol_neg: f64,
    pub tol_zero: f64,
}

impl Default for HessianSection {
    fn default() -> Self {
        Self {
            tol_neg: 1e-6,
            tol_zero: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailsSection {
    /// `random`, `equivariant`, `hf` or `zeros`.
    pub strategy: String,
    pub n_samples: usize,
    /// Angstrom.
    pub sigma_pos: f64,
    pub thresholds: Vec<f64>,
    pub checkpoint: Option<PathBuf>,
    pub bins: usize,
    pub floor: f64,
}

impl Default for TailsSection {
    fn default() -> Self {
        Self {
            strategy: "random".into(),
            n_samples: 5000,
            sigma_pos: 0.05,
            thresholds: vec![1.6e-3, 1e-2, 1e-1],
            checkpoint: None,
            bins: 30,
            floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSection {
    pub sigma_grid: Vec<f64>,
    pub strategies: Vec<String>,
    pub budget: usize,
    pub threshold: f64,
    pub n_trials: usize,
    pub hybrid_restarts: usize,
    pub restart_sigma: f64,
    pub checkpoint: Option<PathBuf>,
    pub shot_noise: Option<(f64, u64)>,
}

impl Default for DisorderSection {
    fn default() -> Self {
        Self {
            sigma_grid: vec![0.0, 0.05, 0.1],
            strategies: vec!["random".into(), "equivariant".into(), "hybrid".into()],
            budget: 2001,
            threshold: 1.6e-3,
            n_trials: 50,
            hybrid_restarts: 4,
            restart_sigma: 0.2,
            checkpoint: None,
            shot_noise: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    /// Parameter indices spanning the slice; the two leading Hessian
    /// eigenvectors at the center when absent.
    pub directions: Option<(usize, usize)>,
    pub half_range: f64,
    pub resolution: usize,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        Self {
            directions: None,
            half_range: std::f64::consts::PI,
            resolution: 41,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotsSection {
    /// Ha²; one row per value.
    pub variances: Vec<f64>,
    /// Ha.
    pub epsilon: f64,
    pub n_steps_discovery: u64,
    pub n_steps_local: u64,
}

impl Default for ShotsSection {
    fn default() -> Self {
        Self {
            variances: vec![1.0, 2.5, 25.0],
            epsilon: 1.6e-3,
            n_steps_discovery: 0,
            n_steps_local: 100,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub hamiltonians: Vec<PathBuf>,
    pub depth: usize,
    pub checkpoint: Option<PathBuf>,
}
