//! Single-hidden-layer regression network trained by backpropagation.
//!
//! `h_k = act(Σ_d w_dk x_d + b_k)`, `ŷ = Σ_k w^o_k h_k + b^o`, trained with
//! per-case SGD on `½(ŷ - y)²` over shuffled epochs.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-z)),
            Activation::Tanh => math::tanh(z),
        }
    }

    /// Derivative expressed through the activation value `h`.
    #[inline]
    fn derivative_from_output(self, h: f64) -> f64 {
        match self {
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Tanh => 1.0 - h * h,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub n_hidden: usize,
    pub activation: Activation,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Initial weights are drawn from `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            n_hidden: 50,
            activation: Activation::Sigmoid,
            n_epochs: 50,
            learning_rate: 0.01,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hidden == 0 {
            return Err(Error::config("n_hidden", "must be at least 1"));
        }
        if self.n_epochs == 0 {
            return Err(Error::config("n_epochs", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be finite and >= 0"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::config("init_scale", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub dims: usize,
    pub activation: Activation,
    /// `w_dk` stored row-major at `d * n_hidden + k`.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpModel {
    pub fn n_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden_weights.len() + self.hidden_bias.len() + self.output_weights.len() + 1
    }

    /// Parameters flattened as `[W, b, w^o, b^o]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        p.extend_from_slice(&self.hidden_weights);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let (nw, k) = (self.hidden_weights.len(), self.n_hidden());
        if index < nw {
            &mut self.hidden_weights[index]
        } else if index < nw + k {
            &mut self.hidden_bias[index - nw]
        } else if index < nw + 2 * k {
            &mut self.output_weights[index - nw - k]
        } else {
            assert_eq!(index, nw + 2 * k, "parameter index out of range");
            &mut self.output_bias
        }
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_into(&self, x: &[f64], hidden: &mut Vec<f64>) {
        let k = self.n_hidden();
        hidden.clear();
        hidden.extend_from_slice(&self.hidden_bias);
        for (d, &xd) in x.iter().enumerate() {
            if xd == 0.0 {
                continue;
            }
            let row = &self.hidden_weights[d * k..(d + 1) * k];
            hidden.iter_mut().zip(row).for_each(|(z, w)| *z += w * xd);
        }
        hidden.iter_mut().for_each(|z| *z = self.activation.apply(*z));
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        math::dot(&self.output_weights, hidden) + self.output_bias
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x)?;
        let mut hidden = Vec::with_capacity(self.n_hidden());
        self.hidden_into(x, &mut hidden);
        Ok(self.output(&hidden))
    }

    /// Gradient of `½(ŷ - y)²` in [`parameters`](Self::parameters) order,
    /// together with the loss.
    pub fn loss_gradient(&self, x: &[f64], y: f64) -> Result<(f64, Vec<f64>)> {
        self.check_dims(x)?;
        let mut hidden = Vec::new();
        self.hidden_into(x, &mut hidden);
        let err = self.output(&hidden) - y;
        let k = self.n_hidden();
        let mut grad = vec![0.0; self.parameter_count()];
        let nw = self.hidden_weights.len();
        for j in 0..k {
            let delta = err * self.output_weights[j] * self.activation.derivative_from_output(hidden[j]);
            for (d, &xd) in x.iter().enumerate() {
                grad[d * k + j] = delta * xd;
            }
            grad[nw + j] = delta;
            grad[nw + k + j] = err * hidden[j];
        }
        grad[nw + 2 * k] = err;
        Ok((0.5 * err * err, grad))
    }

    /// One SGD step on a single case; returns the pre-step loss.
    fn sgd_step(&mut self, x: &[f64], y: f64, lr: f64, hidden: &mut Vec<f64>) -> f64 {
        self.hidden_into(x, hidden);
        let err = self.output(hidden) - y;
        let k = self.n_hidden();
        for j in 0..k {
            let delta = err * self.output_weights[j] * self.activation.derivative_from_output(hidden[j]);
            for (d, &xd) in x.iter().enumerate() {
                self.hidden_weights[d * k + j] -= lr * delta * xd;
            }
            self.hidden_bias[j] -= lr * delta;
            self.output_weights[j] -= lr * err * hidden[j];
        }
        self.output_bias -= lr * err;
        0.5 * err * err
    }

    /// Mean of `½(ŷ - y)²` over `cases`.
    pub fn mean_loss(&self, cases: &[FeatureCase]) -> Result<f64> {
        let mut hidden = Vec::with_capacity(self.n_hidden());
        let mut total = 0.0;
        for c in cases {
            self.check_dims(&c.features)?;
            self.hidden_into(&c.features, &mut hidden);
            let e = self.output(&hidden) - c.label;
            total += 0.5 * e * e;
        }
        Ok(total / cases.len().max(1) as f64)
    }
}

pub fn mlp_init(config: &MlpConfig, dims: usize) -> Result<MlpModel> {
    config.validate()?;
    if dims == 0 {
        return Err(Error::config("dims", "must be at least 1"));
    }
    let k = config.n_hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * config.init_scale)
            .collect()
    };
    let hidden_weights = draw(dims * k);
    let output_weights = draw(k);
    Ok(MlpModel {
        dims,
        activation: config.activation,
        hidden_weights,
        hidden_bias: vec![0.0; k],
        output_weights,
        output_bias: 0.0,
    })
}

pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.forward(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedMlp {
    pub model: MlpModel,
    /// Mean training loss `½(ŷ - y)²` after each epoch.
    pub loss_trace: Vec<f64>,
}

/// Runs `config.n_epochs` shuffled passes of per-case SGD starting from
/// `model`. The visiting order depends only on `config.seed`.
pub fn mlp_train(mut model: MlpModel, train: &[FeatureCase], config: &MlpConfig) -> Result<TrainedMlp> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("mlp_train needs training cases"));
    }
    if let Some(bad) = train.iter().find(|c| c.dims() != model.dims) {
        return Err(Error::DimensionMismatch {
            expected: model.dims,
            found: bad.dims(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut hidden = Vec::with_capacity(model.n_hidden());
    let mut loss_trace = Vec::with_capacity(config.n_epochs);

    for epoch in 0..config.n_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let case = &train[i];
            model.sgd_step(&case.features, case.label, config.learning_rate, &mut hidden);
        }
        let loss = model.mean_loss(train)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch: epoch + 1 });
        }
        loss_trace.push(loss);
    }
    Ok(TrainedMlp { model, loss_trace })
}

/// Largest relative gap between the analytic gradient of `½(ŷ - y)²` and
/// central differences `(f(θ+h) - f(θ-h)) / 2h`, over every parameter.
///
/// The gap for one parameter is `|a - n| / max(|a|, |n|, 1e-6)`; the floor
/// keeps parameters with vanishing gradient from dividing by zero.
pub fn finite_diff_check(model: &MlpModel, case: &FeatureCase, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::config("h", "must be positive"));
    }
    let (_, analytic) = model.loss_gradient(&case.features, case.label)?;
    let mut probe = model.clone();
    let loss = |m: &MlpModel| -> Result<f64> {
        let e = m.forward(&case.features)? - case.label;
        Ok(0.5 * e * e)
    };
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.parameter_mut(i);
        *probe.parameter_mut(i) = original + h;
        let plus = loss(&probe)?;
        *probe.parameter_mut(i) = original - h;
        let minus = loss(&probe)?;
        *probe.parameter_mut(i) = original;
        let numeric = (plus - minus) / (2.0 * h);
        let scale = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}
