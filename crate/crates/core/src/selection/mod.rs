//! Feature masks, hyperparameter grids, hold-out grid search and recursive
//! feature elimination.

mod grid;
mod rfecv;
mod search;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::StatCategory;
use crate::error::{Error, Result};
use crate::features::{avg_qb_index, prev_qb_index, FeatureCase, FEATURE_COUNT, FEATURE_NAMES};
use crate::mlp::{MlpConfig, MlpModel};
use crate::svr::{svr_predict, SvrConfig, SvrModel};

pub use grid::{enumerate_grid, enumerate_mlp_grid, GridSpec, MlpGrid, SvrGrid};
pub use rfecv::{rfecv_select, RfecvOptions, RfecvResult, RfecvStep};
pub use search::{
    aggregate, fit_model, grid_search, plan_splits, score_config, ConfigScore, Metric,
    SearchOptions, SelectionResult, Split,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskProvenance {
    #[default]
    None,
    Manual,
    Rfecv,
}

impl MaskProvenance {
    pub fn name(self) -> &'static str {
        match self {
            MaskProvenance::None => "none",
            MaskProvenance::Manual => "manual",
            MaskProvenance::Rfecv => "rfecv",
        }
    }
}

/// Which feature slots a model sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    mask: Vec<bool>,
    provenance: MaskProvenance,
}

impl FeatureMask {
    pub fn new(mask: Vec<bool>, provenance: MaskProvenance) -> Result<Self> {
        if !mask.iter().any(|&m| m) {
            return Err(Error::config("feature_mask", "at least one feature must stay active"));
        }
        Ok(Self { mask, provenance })
    }

    /// Every one of `dims` features active.
    pub fn all(dims: usize) -> Self {
        Self {
            mask: alloc::vec![true; dims.max(1)],
            provenance: MaskProvenance::None,
        }
    }

    pub fn from_indices(dims: usize, active: &[usize], provenance: MaskProvenance) -> Result<Self> {
        let mut mask = alloc::vec![false; dims];
        for &i in active {
            *mask.get_mut(i).ok_or(Error::DimensionMismatch {
                expected: dims,
                found: i + 1,
            })? = true;
        }
        Self::new(mask, provenance)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn provenance(&self) -> MaskProvenance {
        self.provenance
    }

    pub fn dims(&self) -> usize {
        self.mask.len()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    /// Names of the active slots when the mask spans the standard layout.
    pub fn active_names(&self) -> Vec<&'static str> {
        if self.dims() != FEATURE_COUNT {
            return Vec::new();
        }
        self.active_indices().into_iter().map(|i| FEATURE_NAMES[i]).collect()
    }

    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.mask.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mask.len(),
                found: features.len(),
            });
        }
        Ok(features.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect())
    }

    pub fn apply_case(&self, case: &FeatureCase) -> Result<FeatureCase> {
        Ok(FeatureCase {
            features: self.apply(&case.features)?,
            ..case.clone()
        })
    }

    pub fn apply_cases(&self, cases: &[FeatureCase]) -> Result<Vec<FeatureCase>> {
        cases.iter().map(|c| self.apply_case(c)).collect()
    }
}

/// All features except the four two-point conversion slots.
pub fn manual_mask() -> FeatureMask {
    let mut mask = alloc::vec![true; FEATURE_COUNT];
    for category in [StatCategory::TwoPtPass, StatCategory::TwoPtRush] {
        mask[prev_qb_index(category)] = false;
        mask[avg_qb_index(category)] = false;
    }
    FeatureMask {
        mask,
        provenance: MaskProvenance::Manual,
    }
}

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Svr(SvrConfig),
    Mlp(MlpConfig),
}

impl ModelSpec {
    /// Short label such as `svr:linear:C=0.25:eps=0.25`.
    pub fn describe(&self) -> alloc::string::String {
        match self {
            ModelSpec::Svr(c) => {
                let k = &c.kernel;
                let mut s = alloc::format!("svr:{}:C={}:eps={}", k.kind.name(), c.hyper.c, c.hyper.epsilon);
                if k.kind.uses_gamma() {
                    s.push_str(&alloc::format!(":gamma={}", k.gamma));
                }
                if k.kind.uses_degree() {
                    s.push_str(&alloc::format!(":degree={}", k.degree));
                }
                s
            }
            ModelSpec::Mlp(c) => alloc::format!(
                "nn:{}:hidden={}:epochs={}",
                c.activation.name(),
                c.n_hidden,
                c.n_epochs
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Svr(SvrModel),
    Mlp(MlpModel),
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedModel::Svr(m) => svr_predict(m, x),
            FittedModel::Mlp(m) => m.forward(x),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            FittedModel::Svr(m) => m.dims,
            FittedModel::Mlp(m) => m.dims,
        }
    }
}
