//! Feed-forward network: two ReLU hidden layers of 100 units, one sigmoid
//! output, Xavier-uniform weights, squared-error loss, plain per-sample SGD.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dense, TrainingSet};
use crate::corpus::Label;
use crate::error::{Error, Result};

pub const HIDDEN_LAYERS: [usize; 2] = [100, 100];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnParams {
    pub learning_rate: f64,
    /// Passes over the shuffled training rows.
    pub epochs: usize,
}

impl Default for AnnParams {
    fn default() -> Self {
        AnnParams {
            learning_rate: 0.1,
            epochs: 1,
        }
    }
}

impl AnnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidParams("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Multilayer perceptron with ReLU hidden layers and a single sigmoid output.
/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; weights are
/// stored row-major as `out x in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Gradient with the same shapes as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGradient {
    /// Parameters in [`Mlp::param`] order.
    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

impl Mlp {
    /// Xavier-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn xavier<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let weights = sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                (0..w[0] * w[1]).map(|_| rng.gen_range(-bound..=bound)).collect()
            })
            .collect();
        let biases = sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(sizes: &[usize], weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let layers = sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::InvalidParams(format!("expected {layers} layers")));
        }
        for (l, w) in sizes.windows(2).enumerate() {
            if weights[l].len() != w[0] * w[1] || biases[l].len() != w[1] {
                return Err(Error::InvalidParams(format!("layer {l} has the wrong shape")));
            }
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes.last() != Some(&1) {
            return Err(Error::InvalidParams(format!(
                "layer sizes must be positive and end in a single output, got {sizes:?}"
            )));
        }
        Ok(())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().zip(&self.biases).map(|(w, b)| w.len() + b.len()).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, bool, usize) {
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                return (l, true, i);
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                return (l, false, i);
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter access: per layer, weights then biases.
    pub fn param(&self, i: usize) -> f64 {
        match self.locate(i) {
            (l, true, k) => self.weights[l][k],
            (l, false, k) => self.biases[l][k],
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        match self.locate(i) {
            (l, true, k) => self.weights[l][k] = v,
            (l, false, k) => self.biases[l][k] = v,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: self.sizes[0],
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input included. Zero inputs are skipped,
    /// which leaves the sums bit-identical.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        for l in 0..self.weights.len() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let mut z = self.biases[l].clone();
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += self.weights[l][o * n_in + i] * a;
                }
            }
            debug_assert_eq!(z.len(), n_out);
            if l == last {
                z.iter_mut().for_each(|v| *v = sigmoid(*v));
            } else {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.activations(x).last().expect("output layer")[0])
    }

    /// Output-to-input deltas `dL/dz` for loss `(out - y)^2`.
    fn deltas(&self, acts: &[Vec<f64>], y: f64) -> Vec<Vec<f64>> {
        let layers = self.weights.len();
        let mut deltas = vec![Vec::new(); layers];
        let o = acts[layers][0];
        deltas[layers - 1] = vec![2.0 * (o - y) * o * (1.0 - o)];
        for l in (0..layers - 1).rev() {
            let (n_hidden, n_next) = (self.sizes[l + 1], self.sizes[l + 2]);
            let mut d = vec![0.0; n_hidden];
            for (h, dh) in d.iter_mut().enumerate() {
                // ReLU subgradient is 0 at the kink.
                if acts[l + 1][h] <= 0.0 {
                    continue;
                }
                *dh = (0..n_next)
                    .map(|o| self.weights[l + 1][o * n_hidden + h] * deltas[l + 1][o])
                    .sum();
            }
            deltas[l] = d;
        }
        deltas
    }

    /// Exact backpropagation gradient of `(forward(x) - y)^2`.
    pub fn gradient(&self, x: &[f64], y: f64) -> Result<MlpGradient> {
        self.check_input(x)?;
        let acts = self.activations(x);
        let deltas = self.deltas(&acts, y);
        let weights = (0..self.weights.len())
            .map(|l| {
                let n_in = self.sizes[l];
                let mut g = vec![0.0; self.weights[l].len()];
                for (o, d) in deltas[l].iter().enumerate() {
                    for (i, a) in acts[l].iter().enumerate() {
                        g[o * n_in + i] = d * a;
                    }
                }
                g
            })
            .collect();
        Ok(MlpGradient {
            weights,
            biases: deltas,
        })
    }

    /// One SGD update on a single sample.
    pub fn sgd_step(&mut self, x: &[f64], y: f64, learning_rate: f64) -> Result<()> {
        self.check_input(x)?;
        let acts = self.activations(x);
        let deltas = self.deltas(&acts, y);
        for l in 0..self.weights.len() {
            let n_in = self.sizes[l];
            for (o, &d) in deltas[l].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let step = learning_rate * d;
                let row = &mut self.weights[l][o * n_in..(o + 1) * n_in];
                for (w, &a) in row.iter_mut().zip(&acts[l]) {
                    if a != 0.0 {
                        *w -= step * a;
                    }
                }
                self.biases[l][o] -= step;
            }
        }
        Ok(())
    }

    pub fn loss(&self, x: &[f64], y: f64) -> Result<f64> {
        let o = self.forward(x)?;
        Ok((o - y) * (o - y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    params: AnnParams,
    network: Mlp,
}

impl AnnModel {
    pub(crate) fn fit(params: &AnnParams, seed: u64, data: &TrainingSet<'_>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = data.n_features;
        let sizes = [d, HIDDEN_LAYERS[0], HIDDEN_LAYERS[1], 1];
        let mut network = Mlp::xavier(&sizes, &mut rng)?;
        let targets: Vec<f64> = data
            .labels
            .iter()
            .map(|l| if *l == Label::Yes { 1.0 } else { 0.0 })
            .collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                network.sgd_step(&data.dense(i), targets[i], params.learning_rate)?;
            }
        }
        Ok(AnnModel {
            params: params.clone(),
            network,
        })
    }

    pub fn network(&self) -> &Mlp {
        &self.network
    }

    pub fn n_features(&self) -> usize {
        self.network.sizes[0]
    }

    /// Sigmoid output in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.network.forward(x)
    }

    /// `Yes` when the output is at least 0.5.
    pub fn predict_row(&self, row: &[(usize, u32)]) -> Label {
        let x = dense(row, self.n_features());
        if self.network.forward(&x).expect("row width checked by predict") >= 0.5 {
            Label::Yes
        } else {
            Label::No
        }
    }
}
