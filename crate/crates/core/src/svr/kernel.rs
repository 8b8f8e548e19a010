use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Rbf,
        KernelKind::Sigmoid,
        KernelKind::Linear,
        KernelKind::Polynomial,
    ];

    pub fn uses_gamma(self) -> bool {
        !matches!(self, KernelKind::Linear)
    }

    pub fn uses_degree(self) -> bool {
        matches!(self, KernelKind::Polynomial)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

/// Kernel choice and its parameters. `gamma = 0` means "automatic" when
/// passed to the solver, which substitutes `1 / D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub coef0: f64,
}

fn default_degree() -> u32 {
    3
}

impl KernelSpec {
    pub const fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 0.0,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub const fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub const fn polynomial(gamma: f64, degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0: 0.0,
        }
    }

    pub const fn sigmoid(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Sigmoid,
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "must be finite and >= 0"));
        }
        if self.kind.uses_degree() && self.degree == 0 {
            return Err(Error::config("degree", "must be at least 1"));
        }
        Ok(())
    }

    /// Replaces an automatic (zero) gamma with `1 / dims`.
    pub fn resolved(&self, dims: usize) -> Self {
        let mut out = *self;
        if self.kind.uses_gamma() && self.gamma == 0.0 && dims > 0 {
            out.gamma = 1.0 / dims as f64;
        }
        out
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => math::dot(x, z),
            KernelKind::Rbf => math::exp(-self.gamma * math::squared_distance(x, z)),
            KernelKind::Polynomial => math::powi(self.gamma * math::dot(x, z) + self.coef0, self.degree),
            KernelKind::Sigmoid => math::tanh(self.gamma * math::dot(x, z) + self.coef0),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(spec.eval_unchecked(x, z))
}

/// Largest training set whose full Gram matrix is precomputed.
pub const FULL_CACHE_LIMIT: usize = 4096;

/// Gram-matrix rows for the solver: the full matrix when small enough,
/// otherwise rows recomputed on demand.
pub(crate) struct Gram<'a> {
    points: &'a [&'a [f64]],
    kernel: KernelSpec,
    full: Option<Vec<f64>>,
    diag: Vec<f64>,
}

impl<'a> Gram<'a> {
    pub(crate) fn new(points: &'a [&'a [f64]], kernel: KernelSpec) -> Self {
        let n = points.len();
        let diag = points.iter().map(|p| kernel.eval_unchecked(p, p)).collect();
        let full = (n <= FULL_CACHE_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let k = kernel.eval_unchecked(points[i], points[j]);
                    m[i * n + j] = k;
                    m[j * n + i] = k;
                }
            }
            m
        });
        Self {
            points,
            kernel,
            full,
            diag,
        }
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub(crate) fn row<'b>(&'b self, i: usize, scratch: &'b mut Vec<f64>) -> &'b [f64] {
        let n = self.points.len();
        match &self.full {
            Some(m) => &m[i * n..(i + 1) * n],
            None => {
                scratch.clear();
                scratch.extend(self.points.iter().map(|p| self.kernel.eval_unchecked(self.points[i], p)));
                scratch
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_unit_vectors() {
        let e = [0.0, 1.0, 0.0];
        assert_eq!(kernel_eval(&KernelSpec::linear(), &e, &e).unwrap(), 1.0);
    }

    #[test]
    fn rbf_identical_points() {
        let x = [0.3, -2.0];
        for gamma in [0.0, 0.05, 3.0] {
            assert_eq!(kernel_eval(&KernelSpec::rbf(gamma), &x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn polynomial_degree_two() {
        // x.z = 1*1 + 2*1 = 3
        let k = kernel_eval(&KernelSpec::polynomial(1.0, 2), &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(k, 9.0);
    }

    #[test]
    fn sigmoid_matches_tanh() {
        let k = kernel_eval(&KernelSpec::sigmoid(0.5), &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((k - libm::tanh(1.5)).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn auto_gamma_resolves_to_inverse_dims() {
        assert_eq!(KernelSpec::rbf(0.0).resolved(4).gamma, 0.25);
        assert_eq!(KernelSpec::rbf(0.1).resolved(4).gamma, 0.1);
        assert_eq!(KernelSpec::linear().resolved(4).gamma, 0.0);
    }

    #[test]
    fn on_demand_rows_match_full_matrix() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0 - i as f64 * 0.3]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let kernel = KernelSpec::rbf(0.7);
        let gram = Gram::new(&refs, kernel);
        let mut lazy = Gram::new(&refs, kernel);
        lazy.full = None;
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for i in 0..5 {
            assert_eq!(gram.row(i, &mut s1), lazy.row(i, &mut s2));
            assert_eq!(gram.diag(i), gram.row(i, &mut s1)[i]);
        }
    }
}
