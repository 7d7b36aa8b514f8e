use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fidelity_gradient, FeatureScale, PrecondError, PreconditionerModel, TrainingSet};
use crate::circuit::{self, Statevector};
use crate::optim::{decayed_weight_gradient_step, AdamState, StepOutcome, TrainOptimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityTerm {
    Exact,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lambda_fidelity: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// `total_steps = 0` means `epochs * batches_per_epoch`.
    pub optimizer: TrainOptimConfig,
    pub seed: u64,
    pub fidelity_term: FidelityTerm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_fidelity: 0.1,
            epochs: 200,
            batch_size: 8,
            optimizer: TrainOptimConfig::default(),
            seed: 0,
            fidelity_term: FidelityTerm::Exact,
        }
    }
}

/// Epoch averages of the loss and its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
    pub anchor_term: f64,
    /// `lambda * (1 - F)`, averaged.
    pub fidelity_term: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PreconditionerModel,
    pub trace: Vec<EpochLoss>,
    /// Optimizer steps skipped for non-finite gradients.
    pub skipped_steps: usize,
}

struct Prepared {
    /// `(element, qubit block, scaled features)` per atom.
    atoms: Vec<(usize, Vec<usize>, Vec<f64>)>,
    target: Vec<f64>,
    reference: Statevector,
}

struct ExampleResult {
    anchor: f64,
    fidelity_term: f64,
    grads: Vec<Vec<Vec<f64>>>,
}

/// Fits every readout layer. See [`adapt_readout`] for the frozen variant.
pub fn train(
    model: &PreconditionerModel,
    data: &TrainingSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, PrecondError> {
    run(model, data, cfg, &[])
}

/// Fine-tunes with the listed layers frozen (0 and 1 are the hidden layers,
/// 2 the output layer). An empty list is plain [`train`].
pub fn adapt_readout(
    model: &PreconditionerModel,
    data: &TrainingSet,
    cfg: &TrainConfig,
    frozen_layers: &[usize],
) -> Result<TrainOutcome, PrecondError> {
    run(model, data, cfg, frozen_layers)
}

fn run(
    model: &PreconditionerModel,
    data: &TrainingSet,
    cfg: &TrainConfig,
    frozen: &[usize],
) -> Result<TrainOutcome, PrecondError> {
    if data.is_empty() {
        return Err(PrecondError::EmptyDataset);
    }
    if data.spec() != model.spec() {
        return Err(PrecondError::InvalidConfig(
            "dataset and model use different ansatz specs".into(),
        ));
    }
    if !(cfg.lambda_fidelity >= 0.0) || cfg.batch_size == 0 {
        return Err(PrecondError::InvalidConfig(
            "need lambda_fidelity >= 0 and batch_size >= 1".into(),
        ));
    }
    let n_layers = model.readouts[0].layers.len();
    if let Some(&l) = frozen.iter().find(|&&l| l >= n_layers) {
        return Err(PrecondError::InvalidConfig(format!(
            "no layer {l} to freeze"
        )));
    }
    let trainable: Vec<bool> = (0..n_layers).map(|l| !frozen.contains(&l)).collect();
    let Some(lowest) = trainable.iter().position(|&t| t) else {
        return Err(PrecondError::InvalidConfig("every layer is frozen".into()));
    };

    let batches_per_epoch = data.len().div_ceil(cfg.batch_size);
    let mut opt = cfg.optimizer;
    if opt.total_steps == 0 {
        opt.total_steps = cfg.epochs * batches_per_epoch;
    }
    opt.validate()?;

    let mut model = model.clone();
    if !model.frozen_feature_scale {
        model.scale = None;
        let mut rows = Vec::new();
        for ex in data.examples() {
            rows.extend(
                model
                    .featurizer
                    .all_features(ex.geometry()?)?
                    .into_iter()
                    .map(|f| f.0),
            );
        }
        model.scale = Some(FeatureScale::fit(&rows));
        model.frozen_feature_scale = true;
    }
    let prepared = prepare(&model, data)?;
    let spec = *model.spec();
    let use_fidelity = cfg.fidelity_term == FidelityTerm::Exact && cfg.lambda_fidelity > 0.0;

    let evaluate =
        |model: &PreconditionerModel, ex: &Prepared| -> Result<ExampleResult, PrecondError> {
            let mut theta = vec![0.0; spec.param_count()];
            let mut tapes = Vec::with_capacity(ex.atoms.len());
            for (e, block, x) in &ex.atoms {
                let (out, tape) = model.readouts[*e].forward(x);
                for (o, v) in out.iter().enumerate() {
                    theta[model.route(block, o)] = *v;
                }
                tapes.push(tape);
            }
            let diff: Vec<f64> = theta.iter().zip(&ex.target).map(|(a, b)| a - b).collect();
            let anchor = diff.iter().map(|d| d * d).sum();
            let mut dtheta: Vec<f64> = diff.iter().map(|d| 2.0 * d).collect();
            let mut fidelity_term = 0.0;
            if use_fidelity {
                let f = circuit::prepare_unchecked(&spec, &theta)
                    .inner(&ex.reference)
                    .norm_sqr();
                fidelity_term = cfg.lambda_fidelity * (1.0 - f).max(0.0);
                let gf = fidelity_gradient(&spec, &theta, &ex.target)?;
                dtheta
                    .iter_mut()
                    .zip(&gf)
                    .for_each(|(d, g)| *d -= cfg.lambda_fidelity * g);
            }
            let mut grads: Vec<Vec<Vec<f64>>> = model
                .readouts
                .iter()
                .map(|m| m.layers.iter().map(|l| vec![0.0; l.params.len()]).collect())
                .collect();
            for ((e, block, _), tape) in ex.atoms.iter().zip(&tapes) {
                let n_out = model.readouts[*e].layers.last().map_or(0, |l| l.n_out);
                let d_out: Vec<f64> = (0..n_out).map(|o| dtheta[model.route(block, o)]).collect();
                model.readouts[*e].backward(tape, &d_out, &mut grads[*e], lowest);
            }
            Ok(ExampleResult {
                anchor,
                fidelity_term,
                grads,
            })
        };

    let initial = {
        let results: Vec<ExampleResult> = prepared
            .par_iter()
            .map(|ex| evaluate(&model, ex))
            .collect::<Result<_, _>>()?;
        results
            .iter()
            .map(|r| r.anchor + r.fidelity_term)
            .sum::<f64>()
            / data.len() as f64
    };

    let mut states: Vec<Vec<AdamState>> = model
        .readouts
        .iter()
        .map(|m| {
            m.layers
                .iter()
                .map(|l| AdamState::new(l.params.len()))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    let mut skipped = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_anchor, mut sum_fid) = (0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<ExampleResult> = batch
                .par_iter()
                .map(|&i| evaluate(&model, &prepared[i]))
                .collect::<Result<_, _>>()?;
            let scale = 1.0 / batch.len() as f64;
            for (e, mlp) in model.readouts.iter_mut().enumerate() {
                for (l, layer) in mlp.layers.iter_mut().enumerate() {
                    if !trainable[l] {
                        continue;
                    }
                    let mut g = vec![0.0; layer.params.len()];
                    for r in &results {
                        g.iter_mut()
                            .zip(&r.grads[e][l])
                            .for_each(|(a, b)| *a += b * scale);
                    }
                    let outcome = decayed_weight_gradient_step(
                        &mut layer.params,
                        &g,
                        step,
                        &opt,
                        &mut states[e][l],
                    )?;
                    if outcome == StepOutcome::SkippedNonFinite {
                        skipped += 1;
                    }
                }
            }
            for r in &results {
                sum_anchor += r.anchor;
                sum_fid += r.fidelity_term;
            }
            step += 1;
        }
        let n = data.len() as f64;
        let entry = EpochLoss {
            epoch,
            mean_loss: (sum_anchor + sum_fid) / n,
            anchor_term: sum_anchor / n,
            fidelity_term: sum_fid / n,
        };
        trace.push(entry);
        if initial > 0.0 && entry.mean_loss > 1e3 * initial || !entry.mean_loss.is_finite() {
            return Err(PrecondError::Diverged {
                epoch,
                loss: entry.mean_loss,
                initial,
                trace,
            });
        }
    }
    Ok(TrainOutcome {
        model,
        trace,
        skipped_steps: skipped,
    })
}

fn prepare(model: &PreconditionerModel, data: &TrainingSet) -> Result<Vec<Prepared>, PrecondError> {
    let spec = *model.spec();
    data.examples()
        .iter()
        .map(|ex| {
            let geom = ex.geometry()?;
            let map = ex.qubit_map()?;
            model.check_map(geom, &map)?;
            let inputs = model.atom_inputs(geom)?;
            let atoms = geom
                .atoms()
                .iter()
                .zip(map)
                .zip(inputs)
                .map(|((a, block), x)| Ok((model.element_index(&a.element)?, block, x)))
                .collect::<Result<Vec<_>, PrecondError>>()?;
            Ok(Prepared {
                atoms,
                target: ex.target_parameters.to_vec(),
                reference: circuit::prepare_unchecked(&spec, &ex.target_parameters),
            })
        })
        .collect()
}
