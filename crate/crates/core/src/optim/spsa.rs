use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{OptimError, OptimizerReport, Termination};
use crate::circuit::ParameterVector;

/// Gain schedules `a_k = a / (k + A)^alpha`, `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            c: 0.1,
            big_a: 10.0,
            alpha: 0.602,
            gamma: 0.101,
            max_steps: 200,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn step_size(&self, k: usize) -> f64 {
        self.a / (k as f64 + self.big_a).powf(self.alpha)
    }

    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }

    fn validate(&self) -> Result<(), OptimError> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.a > 0.0
            && self.c > 0.0
            && self.big_a >= 0.0
            && unit(self.alpha)
            && unit(self.gamma))
        {
            return Err(OptimError::InvalidConfig(
                "spsa needs a, c > 0, A >= 0 and alpha, gamma in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// One simultaneous-perturbation gradient estimate; returns the estimate and
/// the two objective values.
pub fn spsa_gradient_estimate<F, R>(
    f: &mut F,
    theta: &[f64],
    ck: f64,
    rng: &mut R,
) -> (Vec<f64>, f64, f64)
where
    F: FnMut(&[f64]) -> f64,
    R: Rng,
{
    let delta: Vec<f64> = (0..theta.len())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
    let (fp, fm) = (f(&plus), f(&minus));
    let scale = (fp - fm) / (2.0 * ck);
    // Delta_i = +-1, so 1 / Delta_i = Delta_i.
    (delta.iter().map(|d| scale * d).collect(), fp, fm)
}

/// First-order SPSA. Two evaluations per step plus one final evaluation of
/// the returned parameters; the trace records the mean of each pair.
pub fn minimize_spsa<F>(
    mut f: F,
    theta0: &[f64],
    cfg: &SpsaConfig,
) -> Result<OptimizerReport, OptimError>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = theta0.to_vec();
    let mut evals = 0;
    let mut trace = Vec::with_capacity(cfg.max_steps + 1);
    let mut skipped = 0;
    for k in 0..cfg.max_steps {
        let mut ck = cfg.perturbation(k);
        let mut attempt = spsa_gradient_estimate(&mut f, &theta, ck, &mut rng);
        evals += 2;
        if !(attempt.1.is_finite() && attempt.2.is_finite()) {
            ck *= 0.5;
            attempt = spsa_gradient_estimate(&mut f, &theta, ck, &mut rng);
            evals += 2;
            if !(attempt.1.is_finite() && attempt.2.is_finite()) {
                skipped += 1;
                continue;
            }
        }
        let (g, fp, fm) = attempt;
        let ak = cfg.step_size(k);
        theta.iter_mut().zip(&g).for_each(|(t, gi)| *t -= ak * gi);
        trace.push((evals, 0.5 * (fp + fm)));
    }
    let final_energy = f(&theta);
    evals += 1;
    if !final_energy.is_finite() {
        return Err(OptimError::NonFinite {
            evaluation: evals,
            value: final_energy,
        });
    }
    trace.push((evals, final_energy));
    Ok(OptimizerReport {
        trace,
        final_parameters: ParameterVector::new(theta).map_err(|_| OptimError::NonFinite {
            evaluation: evals,
            value: f64::NAN,
        })?,
        final_energy,
        termination: Termination::MaxSteps,
        evaluations_used: evals,
        recoveries: skipped,
    })
}
