use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::OptimError;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// AdamW hyperparameters with linear warmup then cosine decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptimConfig {
    pub weight_decay: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl Default for TrainOptimConfig {
    fn default() -> Self {
        Self {
            weight_decay: 1e-4,
            lr_start: 1e-3,
            lr_end: 1e-6,
            warmup_steps: 0,
            total_steps: 0,
        }
    }
}

impl TrainOptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.lr_start > self.lr_end && self.lr_end > 0.0) {
            return Err(OptimError::InvalidConfig(
                "need lr_start > lr_end > 0".into(),
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(OptimError::InvalidConfig(
                "weight_decay must be >= 0".into(),
            ));
        }
        if self.warmup_steps > self.total_steps {
            return Err(OptimError::InvalidConfig(
                "warmup_steps exceeds total_steps".into(),
            ));
        }
        Ok(())
    }
}

/// Learning rate at step `k` (0-based).
pub fn learning_rate(cfg: &TrainOptimConfig, k: usize) -> f64 {
    if k >= cfg.total_steps {
        return cfg.lr_end;
    }
    if k < cfg.warmup_steps {
        return cfg.lr_start * k as f64 / cfg.warmup_steps as f64;
    }
    let span = (cfg.total_steps - cfg.warmup_steps) as f64;
    let progress = (k - cfg.warmup_steps) as f64 / span;
    cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + (PI * progress).cos())
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Updates applied so far (bias-correction counter).
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// The gradient contained a non-finite entry; nothing changed.
    SkippedNonFinite,
}

/// One AdamW update in place, with decay `w <- w (1 - lr wd)` applied separately
/// from the adaptive step.
pub fn decayed_weight_gradient_step(
    weights: &mut [f64],
    grads: &[f64],
    step_index: usize,
    cfg: &TrainOptimConfig,
    state: &mut AdamState,
) -> Result<StepOutcome, OptimError> {
    if grads.len() != weights.len()
        || state.m.len() != weights.len()
        || state.v.len() != weights.len()
    {
        return Err(OptimError::GradientLength {
            expected: weights.len(),
            got: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Ok(StepOutcome::SkippedNonFinite);
    }
    let lr = learning_rate(cfg, step_index);
    state.t += 1;
    let bc1 = 1.0 - BETA1.powi(state.t as i32);
    let bc2 = 1.0 - BETA2.powi(state.t as i32);
    for i in 0..weights.len() {
        let g = grads[i];
        state.m[i] = BETA1 * state.m[i] + (1.0 - BETA1) * g;
        state.v[i] = BETA2 * state.v[i] + (1.0 - BETA2) * g * g;
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        weights[i] *= 1.0 - lr * cfg.weight_decay;
        weights[i] -= lr * mhat / (vhat.sqrt() + EPS);
    }
    Ok(StepOutcome::Applied)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainOptimConfig {
        TrainOptimConfig {
            warmup_steps: 10,
            total_steps: 100,
            ..TrainOptimConfig::default()
        }
    }

    #[test]
    fn schedule_endpoints() {
        let c = cfg();
        assert_eq!(learning_rate(&c, 100), 1e-6);
        assert_eq!(learning_rate(&c, 500), 1e-6);
        assert!((learning_rate(&c, 5) - 0.5e-3).abs() < 1e-18);
        assert!((learning_rate(&c, 10) - 1e-3).abs() < 1e-18);
        let mid = learning_rate(&c, 55);
        assert!((mid - (1e-6 + 0.5 * (1e-3 - 1e-6))).abs() < 1e-15);
        assert!((1..100).all(|k| learning_rate(&c, k) <= 1e-3 + 1e-18));
    }

    #[test]
    fn zero_gradient_without_decay_is_identity() {
        let c = TrainOptimConfig {
            weight_decay: 0.0,
            ..cfg()
        };
        let mut w = vec![0.3, -1.2, 4.0];
        let before = w.clone();
        let mut st = AdamState::new(3);
        for k in 0..20 {
            decayed_weight_gradient_step(&mut w, &[0.0; 3], k, &c, &mut st).unwrap();
        }
        assert_eq!(w, before);
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut w = vec![1.0];
        let mut st = AdamState::new(1);
        let out = decayed_weight_gradient_step(&mut w, &[f64::NAN], 12, &cfg(), &mut st).unwrap();
        assert_eq!(out, StepOutcome::SkippedNonFinite);
        assert_eq!(w, vec![1.0]);
        assert_eq!(st.t, 0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the first Adam step is lr * sign(g).
        let c = TrainOptimConfig {
            weight_decay: 0.0,
            ..cfg()
        };
        let mut w = vec![0.0, 0.0];
        let mut st = AdamState::new(2);
        decayed_weight_gradient_step(&mut w, &[2.0, -0.5], 10, &c, &mut st).unwrap();
        assert!((w[0] + 1e-3).abs() < 1e-10);
        assert!((w[1] - 1e-3).abs() < 1e-10);
    }
}
