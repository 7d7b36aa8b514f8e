use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimize_lbfgs, LbfgsConfig, OptimError, OptimizerReport, Termination};
use crate::circuit::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinHoppingConfig {
    /// Metropolis temperature in energy units; 0 accepts only non-increasing hops.
    pub temperature: f64,
    pub hop_steps: usize,
    pub restarts: usize,
    /// Half-width of the uniform per-coordinate hop, radians.
    pub hop_scale: f64,
    pub seed: u64,
    pub local: LbfgsConfig,
}

impl Default for BasinHoppingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.5,
            hop_steps: 100,
            restarts: 10,
            hop_scale: 0.5,
            seed: 0,
            local: LbfgsConfig::default(),
        }
    }
}

struct RestartOutcome {
    best: (f64, Vec<f64>),
    /// `(evals within this restart, accepted energy)` after every hop.
    trace: Vec<(usize, f64)>,
    evals: usize,
    skipped: usize,
}

fn hop(x: &[f64], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    x.iter()
        .map(|v| {
            v + if scale > 0.0 {
                rng.random_range(-scale..scale)
            } else {
                0.0
            }
        })
        .collect()
}

fn run_restart<F, G>(
    f: &F,
    grad: &G,
    x0: &[f64],
    r: usize,
    cfg: &BasinHoppingConfig,
) -> RestartOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
    let mut evals = 0;
    let mut skipped = 0;
    let mut trace = Vec::with_capacity(cfg.hop_steps + 1);
    let local = |start: &[f64], evals: &mut usize| -> Option<(f64, Vec<f64>)> {
        match minimize_lbfgs(f, grad, start, &cfg.local) {
            Ok(rep) => {
                *evals += rep.evaluations_used;
                Some((rep.final_energy, rep.final_parameters.into_vec()))
            }
            Err(_) => None,
        }
    };

    // Restart 0 refines the given point; the others start from a hop away from it.
    let start = if r == 0 {
        x0.to_vec()
    } else {
        hop(x0, cfg.hop_scale, &mut rng)
    };
    let mut current = match local(&start, &mut evals) {
        Some(c) => c,
        None => {
            skipped += 1;
            evals += 1;
            (f(&start), start)
        }
    };
    let mut best = current.clone();
    trace.push((evals, current.0));
    for _ in 0..cfg.hop_steps {
        let trial = hop(&current.1, cfg.hop_scale, &mut rng);
        let u: f64 = rng.random();
        let Some(candidate) = local(&trial, &mut evals) else {
            skipped += 1;
            trace.push((evals, current.0));
            continue;
        };
        if candidate.0 < best.0 {
            best = candidate.clone();
        }
        let accept = if candidate.0 <= current.0 {
            true
        } else if cfg.temperature > 0.0 {
            u < (-(candidate.0 - current.0) / cfg.temperature).exp()
        } else {
            false
        };
        if accept {
            current = candidate;
        }
        trace.push((evals, current.0));
    }
    RestartOutcome {
        best,
        trace,
        evals,
        skipped,
    }
}

/// Basin hopping with L-BFGS refinement and Metropolis acceptance.
///
/// Restarts run in parallel with seeds `seed + r`; the result is the lowest
/// local minimum seen over all restarts and hops. The trace concatenates the
/// restarts in order with cumulative evaluation counts.
pub fn basin_hopping<F, G>(
    f: F,
    grad: G,
    x0: &[f64],
    cfg: &BasinHoppingConfig,
) -> Result<OptimizerReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if cfg.restarts == 0 {
        return Err(OptimError::InvalidConfig(
            "basin hopping needs restarts >= 1".into(),
        ));
    }
    if !(cfg.temperature >= 0.0) || !(cfg.hop_scale >= 0.0) {
        return Err(OptimError::InvalidConfig(
            "temperature and hop_scale must be >= 0".into(),
        ));
    }
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(&f, &grad, x0, r, cfg))
        .collect();

    let mut trace = Vec::new();
    let mut offset = 0;
    let mut skipped = 0;
    let mut best: Option<&(f64, Vec<f64>)> = None;
    for o in &outcomes {
        trace.extend(o.trace.iter().map(|&(e, v)| (e + offset, v)));
        offset += o.evals;
        skipped += o.skipped;
        if best.is_none_or(|b| o.best.0 < b.0) {
            best = Some(&o.best);
        }
    }
    let (energy, params) = best.expect("at least one restart").clone();
    if !energy.is_finite() {
        return Err(OptimError::NonFinite {
            evaluation: offset,
            value: energy,
        });
    }
    Ok(OptimizerReport {
        trace,
        final_parameters: ParameterVector::new(params).map_err(|_| OptimError::NonFinite {
            evaluation: offset,
            value: f64::NAN,
        })?,
        final_energy: energy,
        termination: Termination::MaxSteps,
        evaluations_used: offset,
        recoveries: skipped,
    })
}
