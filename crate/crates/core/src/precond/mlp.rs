use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer; `params` holds the row-major `n_out x n_in` weights
/// followed by the `n_out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub params: Vec<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            params: vec![0.0; n_out * n_in + n_out],
        }
    }

    /// Uniform weights with variance `1 / n_in`, zero biases.
    fn lecun(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        let mut d = Self::zeros(n_in, n_out);
        let limit = (3.0 / n_in.max(1) as f64).sqrt();
        for w in &mut d.params[..n_out * n_in] {
            *w = rng.random_range(-limit..limit);
        }
        d
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (w, b) = self.params.split_at(self.n_out * self.n_in);
        (0..self.n_out)
            .map(|o| {
                let row = &w[o * self.n_in..(o + 1) * self.n_in];
                b[o] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates `dL/dparams` into `grad` and returns `dL/dx`.
    fn backward(&self, x: &[f64], dy: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let nw = self.n_out * self.n_in;
        let w = &self.params[..nw];
        let mut dx = vec![0.0; self.n_in];
        for o in 0..self.n_out {
            let g = dy[o];
            if g == 0.0 {
                continue;
            }
            let row = o * self.n_in;
            for i in 0..self.n_in {
                grad[row + i] += g * x[i];
                dx[i] += g * w[row + i];
            }
            grad[nw + o] += g;
        }
        dx
    }
}

/// Two tanh hidden layers and a linear output layer followed by `pi * tanh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

pub(crate) struct Tape {
    inputs: Vec<Vec<f64>>,
    /// Post-activation of each layer (`pi * tanh` for the last).
    outputs: Vec<Vec<f64>>,
}

impl Mlp {
    pub(crate) fn new(n_in: usize, hidden: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            layers: vec![
                Dense::lecun(n_in, hidden, rng),
                Dense::lecun(hidden, hidden, rng),
                Dense::zeros(hidden, n_out),
            ],
        }
    }

    pub(crate) fn forward(&self, x: &[f64]) -> (Vec<f64>, Tape) {
        let mut tape = Tape {
            inputs: Vec::with_capacity(3),
            outputs: Vec::with_capacity(3),
        };
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            let a: Vec<f64> = if k == last {
                z.iter().map(|v| std::f64::consts::PI * v.tanh()).collect()
            } else {
                z.iter().map(|v| v.tanh()).collect()
            };
            tape.inputs.push(std::mem::replace(&mut h, a.clone()));
            tape.outputs.push(a);
        }
        (h, tape)
    }

    pub(crate) fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).0
    }

    /// Backpropagates `dL/d(output)`; `grads[k]` matches `layers[k].params`.
    /// Layers below `lowest` are skipped.
    pub(crate) fn backward(
        &self,
        tape: &Tape,
        d_out: &[f64],
        grads: &mut [Vec<f64>],
        lowest: usize,
    ) {
        let last = self.layers.len() - 1;
        let mut dy: Vec<f64> = d_out.to_vec();
        for k in (lowest..self.layers.len()).rev() {
            let a = &tape.outputs[k];
            let dz: Vec<f64> = if k == last {
                let pi = std::f64::consts::PI;
                dy.iter()
                    .zip(a)
                    .map(|(d, y)| d * pi * (1.0 - (y / pi).powi(2)))
                    .collect()
            } else {
                dy.iter().zip(a).map(|(d, y)| d * (1.0 - y * y)).collect()
            };
            dy = self.layers[k].backward(&tape.inputs[k], &dz, &mut grads[k]);
        }
    }
}
