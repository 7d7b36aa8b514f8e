use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EpochLoss, FeatureScale, Mlp, PrecondError, PreconditionerModel};
use crate::circuit::AnsatzSpec;
use crate::geometry::{FeatureConfig, Featurizer};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    element: String,
    layer: usize,
    /// `[n_out, n_in]`.
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format_version: u32,
    feature_config: FeatureConfig,
    vocabulary: Vec<String>,
    qubits_per_element: Vec<usize>,
    spec: AnsatzSpec,
    hidden: usize,
    feature_scale: Option<FeatureScale>,
    frozen_feature_scale: bool,
    layers: Vec<LayerRecord>,
}

impl PreconditionerModel {
    pub fn to_checkpoint_json(&self) -> String {
        let mut layers = Vec::new();
        for (element, mlp) in self.vocabulary().iter().zip(&self.readouts) {
            for (k, l) in mlp.layers.iter().enumerate() {
                let (w, b) = l.params.split_at(l.n_out * l.n_in);
                layers.push(LayerRecord {
                    element: element.clone(),
                    layer: k,
                    shape: [l.n_out, l.n_in],
                    weights: w.to_vec(),
                    bias: b.to_vec(),
                });
            }
        }
        let ck = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            feature_config: self.featurizer.config().clone(),
            vocabulary: self.vocabulary().to_vec(),
            qubits_per_element: self.qubits_per_element.clone(),
            spec: self.spec,
            hidden: self.hidden,
            feature_scale: self.scale.clone(),
            frozen_feature_scale: self.frozen_feature_scale,
            layers,
        };
        serde_json::to_string_pretty(&ck).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self, PrecondError> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| PrecondError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(PrecondError::Checkpoint(format!(
                "unsupported format_version {}",
                ck.format_version
            )));
        }
        let featurizer = Featurizer::new(ck.feature_config, &ck.vocabulary)?;
        if featurizer.vocabulary() != ck.vocabulary.as_slice()
            || ck.qubits_per_element.len() != ck.vocabulary.len()
        {
            return Err(PrecondError::Checkpoint(
                "vocabulary must be ordered and match qubits_per_element".into(),
            ));
        }
        let n_in = featurizer.len();
        let mut readouts = Vec::new();
        for (e, element) in ck.vocabulary.iter().enumerate() {
            let n_out = 2 * ck.spec.layers() * ck.qubits_per_element[e];
            let shapes = [
                [ck.hidden, n_in],
                [ck.hidden, ck.hidden],
                [n_out, ck.hidden],
            ];
            let mut layers = Vec::new();
            for (k, shape) in shapes.iter().enumerate() {
                let rec = ck
                    .layers
                    .iter()
                    .find(|r| &r.element == element && r.layer == k)
                    .ok_or_else(|| {
                        PrecondError::Checkpoint(format!("missing layer {k} for `{element}`"))
                    })?;
                if &rec.shape != shape
                    || rec.weights.len() != shape[0] * shape[1]
                    || rec.bias.len() != shape[0]
                {
                    return Err(PrecondError::Checkpoint(format!(
                        "layer {k} of `{element}` has the wrong shape"
                    )));
                }
                if rec.weights.iter().chain(&rec.bias).any(|v| !v.is_finite()) {
                    return Err(PrecondError::Checkpoint(format!(
                        "layer {k} of `{element}` is not finite"
                    )));
                }
                let mut params = rec.weights.clone();
                params.extend_from_slice(&rec.bias);
                layers.push(super::Dense {
                    n_in: shape[1],
                    n_out: shape[0],
                    params,
                });
            }
            readouts.push(Mlp { layers });
        }
        if let Some(s) = &ck.feature_scale {
            if s.mean.len() != n_in || s.std.len() != n_in {
                return Err(PrecondError::Checkpoint(
                    "feature_scale length differs from feature length".into(),
                ));
            }
        }
        Ok(Self {
            featurizer,
            spec: ck.spec,
            qubits_per_element: ck.qubits_per_element,
            hidden: ck.hidden,
            readouts,
            scale: ck.feature_scale,
            frozen_feature_scale: ck.frozen_feature_scale,
        })
    }
}

/// `epoch,mean_loss,anchor_term,fidelity_term` rows.
pub fn write_loss_csv(trace: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,mean_loss,anchor_term,fidelity_term\n");
    for t in trace {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e}",
            t.epoch, t.mean_loss, t.anchor_term, t.fidelity_term
        );
    }
    out
}
