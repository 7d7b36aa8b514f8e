use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tails::InitStrategy;
use super::{num, wilson_interval, CsvTable, DiagnosticsError};
use crate::circuit::{self, AnsatzSpec};
use crate::geometry::{perturb_positions, MolecularGeometry};
use crate::hamiltonian::{build_chain_model, ChainModelParams};
use crate::optim::{circuit_spsa, SpsaConfig};
use crate::precond::PreconditionerModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Equivariant,
    /// Predicted angles refined by SPSA from several perturbed restarts that
    /// share the budget.
    Hybrid,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Equivariant => "equivariant",
            Strategy::Hybrid => "hybrid",
        }
    }
}

impl FromStr for Strategy {
    type Err = DiagnosticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Strategy::Random),
            "equivariant" => Ok(Strategy::Equivariant),
            "hybrid" => Ok(Strategy::Hybrid),
            other => Err(DiagnosticsError::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderScanConfig {
    /// Position noise levels, Angstrom.
    pub sigma_grid: Vec<f64>,
    pub strategies: Vec<Strategy>,
    /// Energy evaluations per trial, shared by all hybrid restarts.
    pub budget: usize,
    /// Ha.
    pub threshold: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Gain schedule; `max_steps` and `seed` are set per trial from the budget.
    pub spsa: SpsaConfig,
    pub hybrid_restarts: usize,
    /// Standard deviation of the restart kicks, rad.
    pub restart_sigma: f64,
    /// `(Hamiltonian variance, shots)` for noisy SPSA objectives.
    pub shot_noise: Option<(f64, u64)>,
}

impl Default for DisorderScanConfig {
    fn default() -> Self {
        Self {
            sigma_grid: vec![0.0, 0.05, 0.1],
            strategies: vec![Strategy::Random, Strategy::Equivariant, Strategy::Hybrid],
            budget: 2001,
            threshold: 1.6e-3,
            n_trials: 50,
            seed: 0,
            spsa: SpsaConfig::default(),
            hybrid_restarts: 4,
            restart_sigma: 0.2,
            shot_noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPoint {
    pub sigma: f64,
    pub successes: usize,
    pub trials: usize,
    pub probability: f64,
    pub wilson: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySuccess {
    pub strategy: Strategy,
    pub points: Vec<SigmaPoint>,
}

impl StrategySuccess {
    /// Success probability averaged over the sigma grid.
    pub fn grid_mean(&self) -> f64 {
        self.points.iter().map(|p| p.probability).sum::<f64>() / self.points.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderScanResult {
    pub sigma_grid: Vec<f64>,
    pub budget: usize,
    pub threshold: f64,
    pub strategies: Vec<StrategySuccess>,
}

impl DisorderScanResult {
    pub fn grid_mean(&self, strategy: Strategy) -> Option<f64> {
        self.strategies
            .iter()
            .find(|s| s.strategy == strategy)
            .map(StrategySuccess::grid_mean)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "strategy",
            "sigma",
            "successes",
            "trials",
            "p",
            "wilson_lo",
            "wilson_hi",
        ]);
        for s in &self.strategies {
            for p in &s.points {
                t.push(vec![
                    s.strategy.name().into(),
                    num(p.sigma),
                    p.successes.to_string(),
                    p.trials.to_string(),
                    num(p.probability),
                    num(p.wilson.0),
                    num(p.wilson.1),
                ]);
            }
        }
        t
    }
}

fn spsa_steps(budget: usize) -> usize {
    budget.saturating_sub(1) / 2
}

/// Success rates of each strategy on disordered copies of `base`.
///
/// Trial `t` at grid index `s` uses seed `seed ^ (s * n_trials + t)` for the
/// geometry, so all strategies see the same instances. A trial succeeds when
/// the exact energy of the final angles is within `threshold` of the ground
/// energy.
pub fn disorder_success_scan(
    base: &MolecularGeometry,
    chain: &ChainModelParams,
    spec: &AnsatzSpec,
    model: Option<&PreconditionerModel>,
    cfg: &DisorderScanConfig,
) -> Result<DisorderScanResult, DiagnosticsError> {
    if cfg.strategies.is_empty() {
        return Err(DiagnosticsError::InvalidInput(
            "no strategies requested".into(),
        ));
    }
    if cfg.n_trials == 0 || cfg.sigma_grid.is_empty() {
        return Err(DiagnosticsError::InvalidInput(
            "need at least one trial and one sigma".into(),
        ));
    }
    if cfg.sigma_grid.iter().any(|s| !(*s >= 0.0)) || cfg.threshold.is_nan() {
        return Err(DiagnosticsError::InvalidInput(
            "sigma values must be >= 0 and the threshold a number".into(),
        ));
    }
    let needs_model = cfg.strategies.iter().any(|s| *s != Strategy::Random);
    if needs_model && model.is_none() {
        return Err(DiagnosticsError::InvalidInput(
            "equivariant and hybrid strategies need a model".into(),
        ));
    }
    if cfg.hybrid_restarts == 0 || !(cfg.restart_sigma >= 0.0) {
        return Err(DiagnosticsError::InvalidInput(
            "hybrid needs >= 1 restart and restart_sigma >= 0".into(),
        ));
    }
    if spsa_steps(cfg.budget / cfg.hybrid_restarts) == 0 {
        return Err(DiagnosticsError::InvalidInput(format!(
            "budget {} leaves no SPSA step per hybrid restart",
            cfg.budget
        )));
    }

    let jobs: Vec<(usize, usize)> = (0..cfg.sigma_grid.len())
        .flat_map(|s| (0..cfg.n_trials).map(move |t| (s, t)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(si, t)| -> Result<Vec<bool>, DiagnosticsError> {
            let s = cfg.seed ^ (si * cfg.n_trials + t) as u64;
            let geom = perturb_positions(base, cfg.sigma_grid[si], s)?;
            let h = build_chain_model(&geom, chain)?;
            spec.check_hamiltonian(&h)?;
            let e_exact = h.ground_state(&Default::default())?.ground_energy;
            cfg.strategies
                .iter()
                .enumerate()
                .map(|(k, strategy)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    rng.set_stream(1 + k as u64);
                    let spsa_seed = s.wrapping_add((k as u64 + 1) << 32);
                    let final_energy = match strategy {
                        Strategy::Random | Strategy::Equivariant => {
                            let init = if *strategy == Strategy::Random {
                                InitStrategy::Random
                            } else {
                                InitStrategy::Equivariant(model.expect("checked above"))
                            };
                            let theta0 = init.theta0(spec, &geom, &h, &mut rng)?;
                            let spsa = SpsaConfig {
                                max_steps: spsa_steps(cfg.budget),
                                seed: spsa_seed,
                                ..cfg.spsa
                            };
                            let r = circuit_spsa(spec, &h, &theta0, &spsa, cfg.shot_noise)?;
                            circuit::energy(spec, r.final_parameters.as_slice(), &h)?
                        }
                        Strategy::Hybrid => {
                            let center = InitStrategy::Equivariant(model.expect("checked above"))
                                .theta0(spec, &geom, &h, &mut rng)?;
                            let kick = Normal::new(0.0, cfg.restart_sigma).expect("sigma >= 0");
                            let per = cfg.budget / cfg.hybrid_restarts;
                            let mut best = f64::INFINITY;
                            for r in 0..cfg.hybrid_restarts {
                                let theta0: Vec<f64> = if r == 0 {
                                    center.clone()
                                } else {
                                    center.iter().map(|c| c + kick.sample(&mut rng)).collect()
                                };
                                let spsa = SpsaConfig {
                                    max_steps: spsa_steps(per),
                                    seed: spsa_seed ^ r as u64,
                                    ..cfg.spsa
                                };
                                let out = circuit_spsa(spec, &h, &theta0, &spsa, cfg.shot_noise)?;
                                best = best.min(circuit::energy(
                                    spec,
                                    out.final_parameters.as_slice(),
                                    &h,
                                )?);
                            }
                            best
                        }
                    };
                    Ok(final_energy - e_exact < cfg.threshold)
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let strategies = cfg
        .strategies
        .iter()
        .enumerate()
        .map(|(k, &strategy)| StrategySuccess {
            strategy,
            points: cfg
                .sigma_grid
                .iter()
                .enumerate()
                .map(|(si, &sigma)| {
                    let successes = (0..cfg.n_trials)
                        .filter(|t| outcomes[si * cfg.n_trials + t][k])
                        .count();
                    SigmaPoint {
                        sigma,
                        successes,
                        trials: cfg.n_trials,
                        probability: successes as f64 / cfg.n_trials as f64,
                        wilson: wilson_interval(successes, cfg.n_trials),
                    }
                })
                .collect(),
        })
        .collect();
    Ok(DisorderScanResult {
        sigma_grid: cfg.sigma_grid.clone(),
        budget: cfg.budget,
        threshold: cfg.threshold,
        strategies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::Random, Strategy::Equivariant, Strategy::Hybrid] {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!(matches!(
            "greedy".parse::<Strategy>(),
            Err(DiagnosticsError::UnknownStrategy(_))
        ));
    }

    #[test]
    fn infinite_threshold_always_succeeds() {
        let base = MolecularGeometry::linear_chain("H", 3, 1.1).unwrap();
        let spec = AnsatzSpec::new(3, 1).unwrap();
        let cfg = DisorderScanConfig {
            sigma_grid: vec![0.0, 0.1],
            strategies: vec![Strategy::Random],
            budget: 41,
            threshold: f64::INFINITY,
            n_trials: 5,
            hybrid_restarts: 1,
            ..DisorderScanConfig::default()
        };
        let r =
            disorder_success_scan(&base, &ChainModelParams::default(), &spec, None, &cfg).unwrap();
        assert_eq!(r.grid_mean(Strategy::Random), Some(1.0));
        assert_eq!(r.to_table().rows.len(), 2);
    }

    #[test]
    fn model_strategies_need_a_model() {
        let base = MolecularGeometry::linear_chain("H", 3, 1.1).unwrap();
        let spec = AnsatzSpec::new(3, 1).unwrap();
        let cfg = DisorderScanConfig {
            strategies: vec![Strategy::Hybrid],
            ..DisorderScanConfig::default()
        };
        assert!(
            disorder_success_scan(&base, &ChainModelParams::default(), &spec, None, &cfg).is_err()
        );
        let cfg = DisorderScanConfig {
            strategies: vec![],
            ..DisorderScanConfig::default()
        };
        assert!(
            disorder_success_scan(&base, &ChainModelParams::default(), &spec, None, &cfg).is_err()
        );
    }

    #[test]
    fn scan_is_deterministic() {
        let base = MolecularGeometry::linear_chain("H", 3, 1.1).unwrap();
        let spec = AnsatzSpec::new(3, 1).unwrap();
        let chain = ChainModelParams {
            j0: -1.0,
            h: 0.5,
            ..Default::default()
        };
        let cfg = DisorderScanConfig {
            sigma_grid: vec![0.05],
            strategies: vec![Strategy::Random],
            budget: 401,
            n_trials: 6,
            seed: 3,
            ..DisorderScanConfig::default()
        };
        let a = disorder_success_scan(&base, &chain, &spec, None, &cfg).unwrap();
        assert_eq!(
            a,
            disorder_success_scan(&base, &chain, &spec, None, &cfg).unwrap()
        );
        let p = &a.strategies[0].points[0];
        assert!(p.wilson.0 <= p.probability && p.probability <= p.wilson.1);
    }
}
