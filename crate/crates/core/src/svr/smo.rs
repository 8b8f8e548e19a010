//! SMO for the ε-SVR dual.
//!
//! The dual is written over `2N` variables `a_t ∈ [0, C_eff]`: `a_i = α_i`
//! with sign `+1` and `a_{i+N} = α_i*` with sign `-1`, so that
//! `β_i = a_i - a_{i+N}`. With `Q_ts = s_t s_u K(t mod N, u mod N)` and
//! `p = (ε - y, ε + y)` the problem is `min ½aᵀQa + pᵀa` subject to
//! `sᵀa = 0`. Each step picks the maximal violating pair and solves the
//! two-variable subproblem in closed form.
//!
//! For the gradient `G = Qa + p`, `v_t = -s_t G_t` equals `r + b ∓ ε` at
//! training point `t mod N`, so the stopping gap `max_up v - min_low v`
//! bounds every residual-space KKT violation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::kernel::Gram;
use super::{KernelKind, SvrConfig, SvrModel};
use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::math;

/// Coefficients closer than this to a bound count as at the bound.
const BOUND_EPS: f64 = 1e-12;
/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stopping threshold on the maximal KKT gap, in label units.
    pub tol: f64,
    /// Iteration cap; `None` means `100 * N`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: None,
        }
    }
}

pub fn svr_fit(train: &[FeatureCase], config: &SvrConfig, options: &SolverOptions) -> Result<SvrModel> {
    let hyper = config.hyper;
    hyper.validate()?;
    config.kernel.validate()?;
    if !(options.tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    let first = train.first().ok_or(Error::Empty("svr_fit needs training cases"))?;
    let dims = first.dims();
    if let Some(bad) = train.iter().find(|c| c.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: bad.dims(),
        });
    }

    let n = train.len();
    let kernel = config.kernel.resolved(dims);
    let points: Vec<&[f64]> = train.iter().map(|c| c.features.as_slice()).collect();
    let labels: Vec<f64> = train.iter().map(|c| c.label).collect();
    let gram = Gram::new(&points, kernel);
    let c_eff = hyper.c_eff(n);
    let eps = hyper.epsilon;
    let max_iter = options.max_iter.unwrap_or(100 * n);

    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut a = vec![0.0; 2 * n];
    let mut grad: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { eps - labels[t] } else { eps + labels[t - n] })
        .collect();

    let in_up = |t: usize, a: &[f64]| if t < n { a[t] < c_eff } else { a[t] > 0.0 };
    let in_low = |t: usize, a: &[f64]| if t < n { a[t] > 0.0 } else { a[t] < c_eff };

    let mut iterations = 0;
    let mut converged = false;
    let (mut row_i, mut row_j) = (Vec::new(), Vec::new());

    loop {
        let mut up_max = f64::NEG_INFINITY;
        let mut low_min = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..2 * n {
            let v = -sign(t) * grad[t];
            if in_up(t, &a) && v > up_max {
                up_max = v;
                i = t;
            }
            if in_low(t, &a) && v < low_min {
                low_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || up_max - low_min <= options.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (bi, bj) = (i % n, j % n);
        let (si, sj) = (sign(i), sign(j));
        let k_ij = gram.row(bi, &mut row_i)[bj];
        let quad = (gram.diag(bi) + gram.diag(bj) - 2.0 * k_ij).max(TAU);
        let (old_i, old_j) = (a[i], a[j]);

        if si != sj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c_eff {
                    a[i] = c_eff;
                    a[j] = c_eff - diff;
                }
            } else if a[j] > c_eff {
                a[j] = c_eff;
                a[i] = c_eff + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c_eff {
                if a[i] > c_eff {
                    a[i] = c_eff;
                    a[j] = sum - c_eff;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c_eff {
                if a[j] > c_eff {
                    a[j] = c_eff;
                    a[i] = sum - c_eff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        for t in [i, j] {
            if a[t] < BOUND_EPS * c_eff {
                a[t] = 0.0;
            } else if a[t] > c_eff * (1.0 - BOUND_EPS) {
                a[t] = c_eff;
            }
        }

        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        let ki = gram.row(bi, &mut row_i);
        let kj = gram.row(bj, &mut row_j);
        for k in 0..n {
            let u = si * ki[k] * di + sj * kj[k] * dj;
            grad[k] += u;
            grad[k + n] -= u;
        }
    }

    let bias = solve_bias(&a, &grad, &labels, n, c_eff, eps);

    let beta: Vec<f64> = (0..n).map(|k| a[k] - a[k + n]).collect();
    let mut support_vectors = Vec::new();
    let mut support_indices = Vec::new();
    let mut dual_coef = Vec::new();
    for (k, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            support_vectors.push(points[k].to_vec());
            support_indices.push(k);
            dual_coef.push(b);
        }
    }
    let weights = (kernel.kind == KernelKind::Linear).then(|| {
        let mut w = vec![0.0; dims];
        for (sv, b) in support_vectors.iter().zip(&dual_coef) {
            w.iter_mut().zip(sv).for_each(|(wd, x)| *wd += b * x);
        }
        w
    });

    if !converged {
        log::warn!("svr_fit stopped after {iterations} iterations without meeting tol {}", options.tol);
    }
    Ok(SvrModel {
        kernel,
        hyper,
        dims,
        c_eff,
        support_vectors,
        support_indices,
        dual_coef,
        bias,
        weights,
        converged,
        iterations,
    })
}

/// Average of `v_t` over free variables; otherwise the midpoint of the
/// feasible bracket. With every coefficient at zero the bracket is
/// `[max y - ε, min y + ε]`, falling back to the label mean when empty.
fn solve_bias(a: &[f64], grad: &[f64], labels: &[f64], n: usize, c_eff: f64, eps: f64) -> f64 {
    if a.iter().all(|&x| x == 0.0) {
        let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max) - eps;
        let lo = labels.iter().copied().fold(f64::INFINITY, f64::min) + eps;
        return if hi <= lo { 0.5 * (hi + lo) } else { math::mean(labels) };
    }
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut up_max = f64::NEG_INFINITY;
    let mut low_min = f64::INFINITY;
    for t in 0..2 * n {
        let s = if t < n { 1.0 } else { -1.0 };
        let v = -s * grad[t];
        let free = a[t] > 0.0 && a[t] < c_eff;
        if free {
            free_sum += v;
            free_count += 1;
        }
        let up = if t < n { a[t] < c_eff } else { a[t] > 0.0 };
        let low = if t < n { a[t] > 0.0 } else { a[t] < c_eff };
        if up {
            up_max = up_max.max(v);
        }
        if low {
            low_min = low_min.min(v);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (up_max + low_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svr::{kkt_max_violation, svr_predict, KernelSpec, SvrHyper};
    use alloc::vec;

    fn case(x: Vec<f64>, y: f64) -> FeatureCase {
        FeatureCase {
            player_id: "p".into(),
            season: 2010,
            week: 1,
            features: x,
            label: y,
        }
    }

    fn config(c: f64, epsilon: f64, kernel: KernelSpec) -> SvrConfig {
        SvrConfig {
            hyper: SvrHyper { c, epsilon },
            kernel,
        }
    }

    #[test]
    fn constant_targets_give_zero_dual() {
        for eps in [0.0, 0.1, 1.0] {
            let train: Vec<_> = (0..6).map(|i| case(vec![i as f64, 1.0], 4.2)).collect();
            let model = svr_fit(&train, &config(1.0, eps, KernelSpec::linear()), &SolverOptions::default()).unwrap();
            assert!(model.dual_coef.is_empty());
            assert_eq!(model.weights.as_deref(), Some(&[0.0, 0.0][..]));
            assert!((model.bias - 4.2).abs() < 1e-12);
            for c in &train {
                assert!((svr_predict(&model, &c.features).unwrap() - 4.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn points_inside_tube_have_zero_coefficient() {
        let train: Vec<_> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&x| case(vec![x], 3.0 * x + if x == 0.5 { 0.05 } else { 0.0 }))
            .collect();
        let opts = SolverOptions { tol: 1e-9, max_iter: None };
        let model = svr_fit(&train, &config(1.0, 0.3, KernelSpec::linear()), &opts).unwrap();
        assert!(model.converged);
        let beta = model.full_dual(train.len());
        for (c, b) in train.iter().zip(&beta) {
            let r = c.label - svr_predict(&model, &c.features).unwrap();
            if r.abs() < 0.3 - 1e-6 {
                assert_eq!(*b, 0.0, "residual {r}");
            }
        }
    }

    #[test]
    fn invariants_hold_on_small_problem() {
        let train: Vec<_> = (0..12)
            .map(|i| {
                let x = i as f64 / 11.0;
                case(vec![x, (3.0 * x).sin()], 5.0 * x - 2.0 * (3.0 * x).cos())
            })
            .collect();
        for kernel in [
            KernelSpec::linear(),
            KernelSpec::rbf(0.0),
            KernelSpec::polynomial(1.0, 2),
            KernelSpec::sigmoid(0.5),
        ] {
            let model = svr_fit(&train, &config(1.0, 0.05, kernel), &SolverOptions::default()).unwrap();
            assert!(model.converged);
            let sum: f64 = model.dual_coef.iter().sum();
            assert!(sum.abs() < 1e-12, "{sum}");
            assert!(model.dual_coef.iter().all(|b| b.abs() <= model.c_eff));
            assert!(kkt_max_violation(&model, &train).unwrap() <= 1e-3);
        }
    }

    #[test]
    fn linear_weights_equal_dual_expansion() {
        let train: Vec<_> = (0..8).map(|i| case(vec![i as f64 * 0.1, (i % 3) as f64], i as f64)).collect();
        let model = svr_fit(&train, &config(1.0, 0.01, KernelSpec::linear()), &SolverOptions::default()).unwrap();
        for x in [[0.3, 1.0], [2.0, -1.0]] {
            let a = model.predict_kernel_form(&x).unwrap();
            let b = svr_predict(&model, &x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_cap_sets_flag() {
        let train: Vec<_> = (0..10).map(|i| case(vec![i as f64], (i * i) as f64)).collect();
        let opts = SolverOptions { tol: 1e-3, max_iter: Some(1) };
        let model = svr_fit(&train, &config(1.0, 0.01, KernelSpec::linear()), &opts).unwrap();
        assert!(!model.converged);
        assert_eq!(model.iterations, 1);
    }

    #[test]
    fn input_errors() {
        let opts = SolverOptions::default();
        assert!(svr_fit(&[], &SvrConfig::default(), &opts).is_err());
        let ragged = [case(vec![1.0], 1.0), case(vec![1.0, 2.0], 1.0)];
        assert!(svr_fit(&ragged, &SvrConfig::default(), &opts).is_err());
        let bad_tol = SolverOptions { tol: 0.0, max_iter: None };
        assert!(svr_fit(&[case(vec![1.0], 1.0)], &SvrConfig::default(), &bad_tol).is_err());
    }
}
