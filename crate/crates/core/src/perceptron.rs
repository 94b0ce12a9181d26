//! Three-layer stochastic perceptron with Bernoulli hidden units and a
//! winner-take-all output layer.
//!
//! All weights and biases live in one flat parameter vector: the hidden layer
//! row-major as `hidden × (inputs + 1)` (bias last in each row), followed by
//! the output layer as `outputs × (hidden + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::sigmoid;
use crate::rng::{bernoulli, uniform, Rng};
use crate::sampler::ParameterState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptronShape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl PerceptronShape {
    pub const MNIST: Self = Self {
        inputs: 784,
        hidden: 30,
        outputs: 10,
    };

    pub fn hidden_params(&self) -> usize {
        self.hidden * (self.inputs + 1)
    }

    pub fn n_params(&self) -> usize {
        self.hidden_params() + self.outputs * (self.hidden + 1)
    }

    /// Index of hidden weight `(j, i)`; `i == inputs` is the bias.
    pub fn hidden_index(&self, j: usize, i: usize) -> usize {
        j * (self.inputs + 1) + i
    }

    /// Index of output weight `(k, j)`; `j == hidden` is the bias.
    pub fn output_index(&self, k: usize, j: usize) -> usize {
        self.hidden_params() + k * (self.hidden + 1) + j
    }
}

/// Result of one stochastic forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub hidden_p: Vec<f64>,
    pub hidden_z: Vec<bool>,
    pub output_p: Vec<f64>,
    pub winner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronNet {
    pub shape: PerceptronShape,
    /// θ holds the weights; Γ starts at zero.
    pub params: ParameterState,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Soft winner-take-all probabilities `exp(u_k) / Σ exp(u_j)`.
pub fn softmax(u: &[f64]) -> Vec<f64> {
    let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = u.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Index `k` drawn with probability `p_k / Σ p`.
pub fn soft_winner(values: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = values.iter().sum();
    let mut x = uniform(rng) * total;
    for (i, &v) in values.iter().enumerate() {
        if x < v {
            return i;
        }
        x -= v;
    }
    values.len() - 1
}

impl PerceptronNet {
    pub fn new(shape: PerceptronShape, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != shape.n_params() {
            return Err(Error::DimensionMismatch {
                what: "perceptron parameters",
                expected: shape.n_params(),
                got: theta.len(),
            });
        }
        Ok(Self {
            shape,
            params: ParameterState::new(theta),
        })
    }

    pub fn theta(&self) -> &[f64] {
        self.params.theta()
    }

    fn hidden_drive(&self, image: &[f64], j: usize) -> f64 {
        let s = &self.shape;
        let row = &self.theta()[s.hidden_index(j, 0)..s.hidden_index(j, s.inputs) + 1];
        row[..s.inputs].iter().zip(image).map(|(w, x)| w * x).sum::<f64>() + row[s.inputs]
    }

    /// Output membrane potentials given hidden activities.
    pub fn output_drives(&self, hidden: &[f64]) -> Vec<f64> {
        let s = &self.shape;
        (0..s.outputs)
            .map(|k| {
                let row = &self.theta()[s.output_index(k, 0)..s.output_index(k, s.hidden) + 1];
                row[..s.hidden].iter().zip(hidden).map(|(w, z)| w * z).sum::<f64>() + row[s.hidden]
            })
            .collect()
    }

    fn output_probs(&self, hidden: &[f64]) -> Vec<f64> {
        self.output_drives(hidden).into_iter().map(sigmoid).collect()
    }

    /// Hidden units fire with probability `σ(u)`; the output winner is the
    /// argmax of the output probabilities given the hidden bits.
    pub fn forward(&self, image: &[f64], rng: &mut Rng) -> Forward {
        let hidden_p: Vec<f64> = (0..self.shape.hidden)
            .map(|j| sigmoid(self.hidden_drive(image, j)))
            .collect();
        let hidden_z: Vec<bool> = hidden_p.iter().map(|&p| bernoulli(rng, p)).collect();
        self.forward_given_hidden(hidden_p, hidden_z)
    }

    /// Output stage for fixed hidden bits.
    pub fn forward_given_hidden(&self, hidden_p: Vec<f64>, hidden_z: Vec<bool>) -> Forward {
        let zf: Vec<f64> = hidden_z.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect();
        let output_p = self.output_probs(&zf);
        let winner = argmax(&output_p);
        Forward {
            hidden_p,
            hidden_z,
            output_p,
            winner,
        }
    }

    /// Class predicted with hidden probabilities in place of sampled bits.
    pub fn predict_deterministic(&self, image: &[f64]) -> usize {
        let hidden: Vec<f64> = (0..self.shape.hidden)
            .map(|j| sigmoid(self.hidden_drive(image, j)))
            .collect();
        argmax(&self.output_probs(&hidden))
    }
}

#[inline]
pub fn immediate_reward(winner: usize, label: usize) -> f64 {
    if winner == label {
        1.0
    } else {
        0.0
    }
}

/// Writes the reward gradient into `out`: `r x_i (z_j − f_j)` for hidden
/// weights and `r z_j (z_k − g_k)` for output weights, where the winner is
/// the only active output unit.
pub fn immediate_gradient(shape: &PerceptronShape, image: &[f64], fwd: &Forward, reward: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    if reward == 0.0 {
        return;
    }
    for j in 0..shape.hidden {
        let z = if fwd.hidden_z[j] { 1.0 } else { 0.0 };
        let d = reward * (z - fwd.hidden_p[j]);
        let row = &mut out[shape.hidden_index(j, 0)..shape.hidden_index(j, shape.inputs) + 1];
        for (g, x) in row[..shape.inputs].iter_mut().zip(image) {
            *g = d * x;
        }
        row[shape.inputs] = d;
    }
    for k in 0..shape.outputs {
        let z = if k == fwd.winner { 1.0 } else { 0.0 };
        let d = reward * (z - fwd.output_p[k]);
        let row = &mut out[shape.output_index(k, 0)..shape.output_index(k, shape.hidden) + 1];
        for (g, &zh) in row[..shape.hidden].iter_mut().zip(&fwd.hidden_z) {
            *g = if zh { d } else { 0.0 };
        }
        row[shape.hidden] = d;
    }
}
