//! ε-insensitive support vector regression.
//!
//! The fitted function is `f(x) = Σ_i β_i K(x_i, x) + b`. Training minimizes
//!
//! ```text
//! (C / N) Σ_i V_ε(y_i - f(x_i)) + ‖w‖²,   V_ε(r) = max(0, |r| - ε)
//! ```
//!
//! Halving it gives the textbook form `½‖w‖² + C_eff Σ (ξ_i + ξ_i*)` with
//! `C_eff = C / (2N)`, whose dual
//!
//! ```text
//! min_β  ½ βᵀKβ - yᵀβ + ε Σ|β_i|   s.t.  Σ β_i = 0,  -C_eff ≤ β_i ≤ C_eff
//! ```
//!
//! is solved by [`svr_fit`] with two-coefficient SMO steps. Both problems
//! share the same minimizer, so `C` keeps its `(0, 1]` meaning here.

mod kernel;
mod reference;
mod smo;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::math;

pub use kernel::{kernel_eval, KernelKind, KernelSpec, FULL_CACHE_LIMIT};
pub use reference::{svr_reference_fit, ReferenceFit, REFERENCE_MAX_CASES, REFERENCE_MAX_DIMS};
pub use smo::{svr_fit, SolverOptions};

/// Regularization `C` in `(0, 1]` and tube half-width `ε ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyper {
    pub c: f64,
    pub epsilon: f64,
}

impl SvrHyper {
    pub fn new(c: f64, epsilon: f64) -> Result<Self> {
        let hyper = Self { c, epsilon };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::config("c", alloc::format!("{} outside (0, 1]", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Box constraint of the rescaled dual.
    pub fn c_eff(&self, n: usize) -> f64 {
        self.c / (2.0 * n as f64)
    }
}

impl Default for SvrHyper {
    fn default() -> Self {
        Self {
            c: 0.25,
            epsilon: 0.25,
        }
    }
}

/// A kernel together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub hyper: SvrHyper,
    pub kernel: KernelSpec,
}

impl Default for SvrConfig {
    /// `C = 0.25`, `ε = 0.25`, linear kernel.
    fn default() -> Self {
        Self {
            hyper: SvrHyper::default(),
            kernel: KernelSpec::linear(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// Kernel with gamma already resolved.
    pub kernel: KernelSpec,
    pub hyper: SvrHyper,
    pub dims: usize,
    pub c_eff: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// Position of each support vector in the training set.
    pub support_indices: Vec<usize>,
    /// `β_i = α_i - α_i*` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// `w = Σ β_i x_i`, linear kernel only.
    pub weights: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

impl SvrModel {
    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `Σ β_i K(x_i, x) + b`.
    pub fn predict_kernel_form(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x)?;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, beta)| beta * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// `β` for every training case, zero off the support set.
    pub fn full_dual(&self, n_train: usize) -> Vec<f64> {
        let mut beta = alloc::vec![0.0; n_train];
        for (&i, &b) in self.support_indices.iter().zip(&self.dual_coef) {
            beta[i] = b;
        }
        beta
    }

    /// `‖w‖² = βᵀKβ` over the support set.
    pub fn weight_norm_sq(&self) -> f64 {
        if let Some(w) = &self.weights {
            return math::dot(w, w);
        }
        let mut total = 0.0;
        for (xi, bi) in self.support_vectors.iter().zip(&self.dual_coef) {
            for (xj, bj) in self.support_vectors.iter().zip(&self.dual_coef) {
                total += bi * bj * self.kernel.eval_unchecked(xi, xj);
            }
        }
        total
    }
}

pub fn svr_predict(model: &SvrModel, x: &[f64]) -> Result<f64> {
    match &model.weights {
        Some(w) => {
            model.check_dims(x)?;
            Ok(math::dot(w, x) + model.bias)
        }
        None => model.predict_kernel_form(x),
    }
}

/// `V_ε(r)`: zero inside the tube, `|r| - ε` outside.
pub fn epsilon_insensitive_loss(residual: f64, epsilon: f64) -> f64 {
    (residual.abs() - epsilon).max(0.0)
}

/// The training objective `(C/N) Σ V_ε(y_i - (x_i·w + b)) + ‖w‖²` for an
/// explicit linear model.
pub fn linear_objective(
    cases: &[FeatureCase],
    weights: &[f64],
    bias: f64,
    hyper: &SvrHyper,
) -> f64 {
    let n = cases.len() as f64;
    let loss: f64 = cases
        .iter()
        .map(|c| epsilon_insensitive_loss(c.label - (math::dot(&c.features, weights) + bias), hyper.epsilon))
        .sum();
    hyper.c / n * loss + math::dot(weights, weights)
}

/// The training objective for any fitted model, with `‖w‖²` taken in
/// feature space.
pub fn model_objective(model: &SvrModel, cases: &[FeatureCase]) -> Result<f64> {
    let n = cases.len() as f64;
    let mut loss = 0.0;
    for c in cases {
        loss += epsilon_insensitive_loss(c.label - svr_predict(model, &c.features)?, model.hyper.epsilon);
    }
    Ok(model.hyper.c / n * loss + model.weight_norm_sq())
}

/// Largest violation of the optimality conditions on the training set,
/// measured in label units. Zero at an exact optimum.
///
/// * `β_i = 0`: `|r_i| ≤ ε`
/// * `β_i = ±C_eff`: `±r_i ≥ ε`
/// * otherwise: `r_i = ±ε` with the sign of `β_i`
pub fn kkt_max_violation(model: &SvrModel, train: &[FeatureCase]) -> Result<f64> {
    let beta = model.full_dual(train.len());
    let eps = model.hyper.epsilon;
    let bound = model.c_eff * (1.0 - 1e-9);
    let mut worst: f64 = 0.0;
    for (case, &b) in train.iter().zip(&beta) {
        let r = case.label - svr_predict(model, &case.features)?;
        let violation = if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if b >= bound {
            (eps - r).max(0.0)
        } else if b <= -bound {
            (eps + r).max(0.0)
        } else if b > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}
