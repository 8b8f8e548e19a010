//! Brute-force primal minimizer for tiny linear problems, used to check the
//! dual solver.
//!
//! For fixed `w` the best bias is found exactly: the loss in `b` is convex
//! piecewise linear with breakpoints at `r_i ± ε`, so its minimizers form an
//! interval spanned by breakpoints, and the midpoint is taken. The weights
//! are found by a dense grid over a box that must contain the optimum
//! (`‖w*‖² ≤ objective(0, b*)`), re-centred and shrunk around the best cell
//! until the cell width drops below the requested resolution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{epsilon_insensitive_loss, KernelKind, KernelSpec, SvrHyper};
use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::math;

pub const REFERENCE_MAX_CASES: usize = 8;
pub const REFERENCE_MAX_DIMS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

struct Problem<'a> {
    cases: &'a [FeatureCase],
    hyper: SvrHyper,
}

impl Problem<'_> {
    /// Objective minimized over `b` for fixed `w`, plus the chosen `b`.
    fn profile(&self, w: &[f64], residuals: &mut Vec<f64>) -> (f64, f64) {
        residuals.clear();
        residuals.extend(self.cases.iter().map(|c| c.label - math::dot(&c.features, w)));
        let eps = self.hyper.epsilon;
        let loss_at = |b: f64| -> f64 {
            residuals.iter().map(|r| epsilon_insensitive_loss(r - b, eps)).sum()
        };
        let mut best = f64::INFINITY;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in residuals.iter() {
            for b in [r - eps, r + eps] {
                let l = loss_at(b);
                let slack = 1e-12 * (1.0 + l.abs());
                if best.is_infinite() || l < best - slack {
                    best = l;
                    lo = b;
                    hi = b;
                } else if l <= best + slack {
                    lo = lo.min(b);
                    hi = hi.max(b);
                }
            }
        }
        let n = self.cases.len() as f64;
        (self.hyper.c / n * best + math::dot(w, w), 0.5 * (lo + hi))
    }
}

pub fn svr_reference_fit(
    train: &[FeatureCase],
    hyper: &SvrHyper,
    kernel: &KernelSpec,
    grid_resolution: f64,
) -> Result<ReferenceFit> {
    if kernel.kind != KernelKind::Linear {
        return Err(Error::LinearKernelRequired("svr_reference_fit"));
    }
    hyper.validate()?;
    if !(grid_resolution > 0.0) {
        return Err(Error::config("grid_resolution", "must be positive"));
    }
    let first = train.first().ok_or(Error::Empty("svr_reference_fit needs cases"))?;
    let dims = first.dims();
    if train.len() > REFERENCE_MAX_CASES || dims > REFERENCE_MAX_DIMS || dims == 0 {
        return Err(Error::TooLarge(format!(
            "{} cases x {dims} dims (limit {REFERENCE_MAX_CASES} x {REFERENCE_MAX_DIMS})",
            train.len()
        )));
    }
    if train.iter().any(|c| c.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: train.iter().map(|c| c.dims()).find(|&d| d != dims).unwrap_or(dims),
        });
    }

    let problem = Problem { cases: train, hyper: *hyper };
    let mut scratch = Vec::with_capacity(train.len());
    let half_steps: i64 = if dims <= 2 { 20 } else { 10 };

    let mut center = vec![0.0; dims];
    let (obj0, _) = problem.profile(&center, &mut scratch);
    let mut radius = math::sqrt(obj0) * 1.05 + grid_resolution;
    let mut best_w = center.clone();
    let mut best_obj = obj0;

    let mut point = vec![0.0; dims];
    let mut idx = vec![-half_steps; dims];
    loop {
        let step = radius / half_steps as f64;
        idx.iter_mut().for_each(|i| *i = -half_steps);
        'grid: loop {
            for d in 0..dims {
                point[d] = center[d] + idx[d] as f64 * step;
            }
            let (obj, _) = problem.profile(&point, &mut scratch);
            if obj < best_obj {
                best_obj = obj;
                best_w.copy_from_slice(&point);
            }
            // odometer increment
            for d in 0..dims {
                idx[d] += 1;
                if idx[d] <= half_steps {
                    continue 'grid;
                }
                idx[d] = -half_steps;
            }
            break;
        }
        if step < grid_resolution {
            break;
        }
        center.copy_from_slice(&best_w);
        radius = 3.0 * step;
    }

    let (objective, bias) = problem.profile(&best_w, &mut scratch);
    Ok(ReferenceFit {
        weights: best_w,
        bias,
        objective,
    })
}
