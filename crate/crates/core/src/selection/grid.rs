use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{Activation, MlpConfig};
use crate::svr::{KernelKind, KernelSpec, SvrConfig, SvrHyper};

/// SVR hyperparameter sets. Defaults are the published search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrGrid {
    pub kernels: Vec<KernelKind>,
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
    pub degree: Vec<u32>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self {
            kernels: KernelKind::ALL.to_vec(),
            c: vec![0.25, 0.5, 0.75, 1.0],
            epsilon: vec![0.05, 0.1, 0.15, 0.2, 0.25],
            gamma: vec![0.0, 0.05, 0.1, 0.15],
            degree: vec![2, 3],
        }
    }
}

impl SvrGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("kernels", self.kernels.is_empty()),
            ("c", self.c.is_empty()),
            ("epsilon", self.epsilon.is_empty()),
            ("gamma", self.gamma.is_empty()),
            ("degree", self.degree.is_empty()),
        ];
        if let Some((field, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::config(field, "grid set is empty"));
        }
        Ok(())
    }

    /// `Σ_k |C|·|ε|·|γ_k|·|degree_k|` with irrelevant sets counted once.
    pub fn expected_len(&self) -> usize {
        self.kernels
            .iter()
            .map(|k| {
                let g = if k.uses_gamma() { self.gamma.len() } else { 1 };
                let d = if k.uses_degree() { self.degree.len() } else { 1 };
                self.c.len() * self.epsilon.len() * g * d
            })
            .sum()
    }
}

/// Network hyperparameter sets. Defaults are the published search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub epochs: Vec<usize>,
    pub hidden: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Default for MlpGrid {
    fn default() -> Self {
        Self {
            epochs: vec![10, 50, 100, 1000],
            hidden: vec![10, 25, 50, 100],
            activations: vec![Activation::Sigmoid, Activation::Tanh],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub svr: SvrGrid,
    pub mlp: MlpGrid,
}

fn push_unique<T: PartialEq>(out: &mut Vec<T>, item: T) {
    if !out.contains(&item) {
        out.push(item);
    }
}

/// Cross product of `grid`, skipping parameters the kernel ignores, in
/// kernel, C, ε, γ, degree order. Duplicates are dropped.
pub fn enumerate_grid(grid: &SvrGrid) -> Result<Vec<SvrConfig>> {
    grid.validate()?;
    let mut out = Vec::with_capacity(grid.expected_len());
    for &kind in &grid.kernels {
        for &c in &grid.c {
            for &epsilon in &grid.epsilon {
                let hyper = SvrHyper::new(c, epsilon)?;
                let gammas: &[f64] = if kind.uses_gamma() { &grid.gamma } else { &[0.0] };
                let degrees: &[u32] = if kind.uses_degree() { &grid.degree } else { &[3] };
                for &gamma in gammas {
                    for &degree in degrees {
                        let kernel = KernelSpec {
                            kind,
                            gamma,
                            degree,
                            coef0: 0.0,
                        };
                        kernel.validate()?;
                        push_unique(&mut out, SvrConfig { hyper, kernel });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Epochs × hidden units × activation, other fields copied from `base`.
pub fn enumerate_mlp_grid(grid: &MlpGrid, base: &MlpConfig) -> Result<Vec<MlpConfig>> {
    if grid.epochs.is_empty() || grid.hidden.is_empty() || grid.activations.is_empty() {
        return Err(Error::config("mlp_grid", "grid set is empty"));
    }
    let mut out = Vec::new();
    for &n_epochs in &grid.epochs {
        for &n_hidden in &grid.hidden {
            for &activation in &grid.activations {
                let cfg = MlpConfig {
                    n_epochs,
                    n_hidden,
                    activation,
                    ..*base
                };
                cfg.validate()?;
                push_unique(&mut out, cfg);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_grids() {
        let svr = enumerate_grid(&SvrGrid::default()).unwrap();
        assert_eq!(svr.len(), 20 * (1 + 4 + 4 + 8));
        assert_eq!(svr.len(), 340);
        let nn = enumerate_mlp_grid(&MlpGrid::default(), &MlpConfig::default()).unwrap();
        assert_eq!(nn.len(), 32);
    }

    #[test]
    fn linear_only_grid() {
        let grid = SvrGrid {
            kernels: vec![KernelKind::Linear],
            c: vec![0.5, 1.0],
            epsilon: vec![0.1, 0.2],
            ..SvrGrid::default()
        };
        let configs = enumerate_grid(&grid).unwrap();
        assert_eq!(configs.len(), 4);
        assert!(configs.iter().all(|c| c.kernel == KernelSpec::linear()));
    }

    #[test]
    fn duplicates_collapse_and_empty_sets_fail() {
        let grid = SvrGrid {
            kernels: vec![KernelKind::Linear, KernelKind::Linear],
            c: vec![1.0, 1.0],
            epsilon: vec![0.1],
            ..SvrGrid::default()
        };
        assert_eq!(enumerate_grid(&grid).unwrap().len(), 1);
        let empty = SvrGrid { c: vec![], ..SvrGrid::default() };
        assert!(enumerate_grid(&empty).is_err());
        assert!(enumerate_grid(&SvrGrid { c: vec![2.0], ..SvrGrid::default() }).is_err());
    }

    fn distinct(values: Vec<u32>) -> Vec<u32> {
        let mut v = values;
        v.sort_unstable();
        v.dedup();
        v
    }

    proptest! {
        #[test]
        fn size_matches_closed_form(
            kernel_bits in 1u8..16,
            cs in proptest::collection::vec(1u32..=20, 1..5),
            eps in proptest::collection::vec(0u32..20, 1..5),
            gammas in proptest::collection::vec(0u32..20, 1..5),
            degrees in proptest::collection::vec(1u32..6, 1..4),
        ) {
            let kernels: Vec<KernelKind> = KernelKind::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| kernel_bits & (1 << i) != 0)
                .map(|(_, k)| *k)
                .collect();
            let grid = SvrGrid {
                kernels,
                c: distinct(cs).into_iter().map(|c| f64::from(c) / 20.0).collect(),
                epsilon: distinct(eps).into_iter().map(|e| f64::from(e) / 20.0).collect(),
                gamma: distinct(gammas).into_iter().map(|g| f64::from(g) / 20.0).collect(),
                degree: distinct(degrees),
            };
            prop_assert_eq!(enumerate_grid(&grid).unwrap().len(), grid.expected_len());
        }
    }
}
