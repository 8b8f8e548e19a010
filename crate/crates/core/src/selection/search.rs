use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FittedModel, ModelSpec};
use crate::error::{Error, Result};
use crate::eval::compute_metrics;
use crate::features::FeatureCase;
use crate::mlp::{mlp_init, mlp_train};
use crate::svr::{svr_fit, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Rmse,
    Mae,
}

impl Metric {
    pub fn score(self, predictions: &[f64], labels: &[f64]) -> Result<f64> {
        let m = compute_metrics(predictions, labels, f64::INFINITY)?;
        Ok(match self {
            Metric::Rmse => m.rmse,
            Metric::Mae => m.mae,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub repeats: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub metric: Metric,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            val_fraction: 0.2,
            seed: 0,
            metric: Metric::Rmse,
            solver: SolverOptions::default(),
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config("val_fraction", "must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

/// Indices of one fit/validation partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub fit: Vec<usize>,
    pub validation: Vec<usize>,
}

/// One seeded random partition of `0..n` per repeat. The validation part
/// holds `round(n · val_fraction)` cases, at least one and at most `n - 1`.
pub fn plan_splits(n: usize, options: &SearchOptions) -> Result<Vec<Split>> {
    options.validate()?;
    if n < 2 {
        return Err(Error::Empty("grid search needs at least two training cases"));
    }
    let n_val = libm::round(n as f64 * options.val_fraction).clamp(1.0, (n - 1) as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut order: Vec<usize> = (0..n).collect();
    Ok((0..options.repeats)
        .map(|_| {
            order.shuffle(&mut rng);
            let mut validation = order[..n_val].to_vec();
            let mut fit = order[n_val..].to_vec();
            validation.sort_unstable();
            fit.sort_unstable();
            Split { fit, validation }
        })
        .collect())
}

pub fn fit_model(spec: &ModelSpec, train: &[FeatureCase], solver: &SolverOptions) -> Result<FittedModel> {
    match spec {
        ModelSpec::Svr(cfg) => {
            let model = svr_fit(train, cfg, solver)?;
            if !model.converged {
                log::warn!("{} stopped at the iteration cap", spec.describe());
            }
            Ok(FittedModel::Svr(model))
        }
        ModelSpec::Mlp(cfg) => {
            let dims = train.first().map_or(0, FeatureCase::dims);
            let init = mlp_init(cfg, dims)?;
            Ok(FittedModel::Mlp(mlp_train(init, train, cfg)?.model))
        }
    }
}

/// Fits `spec` on the split's fit part and scores it on the validation
/// part. Any failure, including a non-finite score, yields `None`.
pub fn score_config(
    train: &[FeatureCase],
    split: &Split,
    spec: &ModelSpec,
    options: &SearchOptions,
) -> Option<f64> {
    let fit: Vec<FeatureCase> = split.fit.iter().map(|&i| train[i].clone()).collect();
    let outcome = fit_model(spec, &fit, &options.solver).and_then(|model| {
        let mut predictions = Vec::with_capacity(split.validation.len());
        let mut labels = Vec::with_capacity(split.validation.len());
        for &i in &split.validation {
            predictions.push(model.predict(&train[i].features)?);
            labels.push(train[i].label);
        }
        options.metric.score(&predictions, &labels)
    });
    match outcome {
        Ok(score) if score.is_finite() => Some(score),
        Ok(score) => {
            log::warn!("{} scored {score}; marked failed", spec.describe());
            None
        }
        Err(err) => {
            log::warn!("{} failed to fit: {err}", spec.describe());
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub spec: ModelSpec,
    /// Validation score per repeat; `None` where fitting failed.
    pub scores: Vec<Option<f64>>,
    /// Mean over repeats, or `None` (treated as `+∞`) if any repeat failed.
    pub mean: Option<f64>,
}

impl ConfigScore {
    pub fn failed(&self) -> bool {
        self.mean.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best: ModelSpec,
    pub best_index: usize,
    pub best_score: f64,
    pub entries: Vec<ConfigScore>,
    pub repeats: usize,
    pub val_fraction: f64,
    pub metric: Metric,
}

/// Combines per-configuration, per-repeat scores (`scores[config][repeat]`)
/// into a result. The lowest mean wins; ties go to the earlier
/// configuration.
pub fn aggregate(
    specs: &[ModelSpec],
    scores: Vec<Vec<Option<f64>>>,
    options: &SearchOptions,
) -> Result<SelectionResult> {
    if specs.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: specs.len(),
            found: scores.len(),
        });
    }
    let mut entries = Vec::with_capacity(specs.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (spec, row)) in specs.iter().zip(scores).enumerate() {
        let mean = row
            .iter()
            .copied()
            .collect::<Option<Vec<f64>>>()
            .filter(|r| !r.is_empty())
            .map(|r| r.iter().sum::<f64>() / r.len() as f64);
        if let Some(m) = mean {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((i, m));
            }
        }
        entries.push(ConfigScore {
            spec: *spec,
            scores: row,
            mean,
        });
    }
    let (best_index, best_score) = best.ok_or(Error::Empty("every grid configuration failed"))?;
    Ok(SelectionResult {
        best: specs[best_index],
        best_index,
        best_score,
        entries,
        repeats: options.repeats,
        val_fraction: options.val_fraction,
        metric: options.metric,
    })
}

/// Repeated hold-out search over `specs`, run sequentially.
pub fn grid_search(train: &[FeatureCase], specs: &[ModelSpec], options: &SearchOptions) -> Result<SelectionResult> {
    if specs.is_empty() {
        return Err(Error::Empty("grid search needs at least one configuration"));
    }
    let splits = plan_splits(train.len(), options)?;
    let scores = specs
        .iter()
        .map(|spec| splits.iter().map(|split| score_config(train, split, spec, options)).collect())
        .collect();
    aggregate(specs, scores, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpConfig;
    use crate::svr::{KernelSpec, SvrConfig, SvrHyper};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn linear_data(n: usize, seed: u64) -> Vec<FeatureCase> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                FeatureCase {
                    player_id: alloc::format!("p{i}"),
                    season: 2010,
                    week: 1,
                    label: 0.6 * x[0] - 0.4 * x[1] + 0.2 * x[2],
                    features: x,
                }
            })
            .collect()
    }

    fn svr(c: f64, epsilon: f64) -> ModelSpec {
        ModelSpec::Svr(SvrConfig {
            hyper: SvrHyper { c, epsilon },
            kernel: KernelSpec::linear(),
        })
    }

    #[test]
    fn splits_partition_and_are_seeded() {
        let opts = SearchOptions { repeats: 3, val_fraction: 0.25, seed: 9, ..Default::default() };
        let a = plan_splits(20, &opts).unwrap();
        assert_eq!(a, plan_splits(20, &opts).unwrap());
        for s in &a {
            assert_eq!(s.validation.len(), 5);
            let mut all: Vec<usize> = s.fit.iter().chain(&s.validation).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..20).collect::<Vec<_>>());
        }
        assert_ne!(a[0], a[1]);
        assert!(plan_splits(1, &opts).is_err());
        assert!(plan_splits(10, &SearchOptions { val_fraction: 1.0, ..opts }).is_err());
        assert!(plan_splits(10, &SearchOptions { repeats: 0, ..opts }).is_err());
    }

    #[test]
    fn singleton_grid_wins() {
        let train = linear_data(30, 1);
        let result = grid_search(&train, &[svr(1.0, 0.1)], &SearchOptions::default()).unwrap();
        assert_eq!(result.best_index, 0);
        assert_eq!(result.entries.len(), 1);
        assert_eq!(result.entries[0].scores.len(), 5);
    }

    #[test]
    fn large_epsilon_loses_on_linear_data() {
        let train = linear_data(80, 2);
        let specs = [svr(1.0, 0.5), svr(1.0, 0.01), svr(1.0, 0.3)];
        let opts = SearchOptions::default();
        let result = grid_search(&train, &specs, &opts).unwrap();
        // exhaustive oracle
        let splits = plan_splits(train.len(), &opts).unwrap();
        let means: Vec<f64> = specs
            .iter()
            .map(|s| splits.iter().map(|sp| score_config(&train, sp, s, &opts).unwrap()).sum::<f64>() / 5.0)
            .collect();
        let oracle = (0..3).fold(0, |b, i| if means[i] < means[b] { i } else { b });
        assert_eq!(result.best_index, oracle);
        assert_eq!(result.best_index, 1);
    }

    #[test]
    fn failing_configuration_is_flagged_and_skipped() {
        let train = linear_data(30, 3);
        let diverging = ModelSpec::Mlp(MlpConfig { learning_rate: 1e9, n_epochs: 5, init_scale: 1.0, ..MlpConfig::default() });
        let mut scaled = train.clone();
        scaled.iter_mut().for_each(|c| c.label *= 1e6);
        let result = grid_search(&scaled, &[diverging, svr(1.0, 0.1)], &SearchOptions::default()).unwrap();
        assert!(result.entries[0].failed());
        assert_eq!(result.best_index, 1);
    }

    #[test]
    fn all_failed_is_an_error() {
        let scores = vec![vec![None], vec![Some(1.0), None]];
        assert!(aggregate(&[svr(1.0, 0.1), svr(0.5, 0.1)], scores, &SearchOptions::default()).is_err());
    }

    #[test]
    fn ties_go_to_list_order() {
        let specs = [svr(1.0, 0.1), svr(0.5, 0.1), svr(0.25, 0.1)];
        let scores = vec![vec![Some(2.0)], vec![Some(1.0)], vec![Some(1.0)]];
        let r = aggregate(&specs, scores, &SearchOptions::default()).unwrap();
        assert_eq!(r.best_index, 1);
    }

    proptest! {
        #[test]
        fn argmin_survives_monotone_transforms(raw in proptest::collection::vec(0.01f64..10.0, 1..12)) {
            // one repeat: the mean is the score itself, so any increasing map preserves the argmin
            let specs: Vec<ModelSpec> = (0..raw.len()).map(|i| svr(1.0, i as f64 * 0.01)).collect();
            let opts = SearchOptions { repeats: 1, ..Default::default() };
            let wrap = |f: &dyn Fn(f64) -> f64| -> Vec<Vec<Option<f64>>> {
                raw.iter().map(|&v| vec![Some(f(v))]).collect()
            };
            let base = aggregate(&specs, wrap(&|v| v), &opts).unwrap();
            for f in [&(|v: f64| v.ln()) as &dyn Fn(f64) -> f64, &|v: f64| v.sqrt(), &|v: f64| v * v * v + 2.0] {
                prop_assert_eq!(aggregate(&specs, wrap(f), &opts).unwrap().best_index, base.best_index);
            }
        }

        #[test]
        fn permuting_configs_keeps_the_winner(raw in proptest::collection::vec(0.0f64..10.0, 2..10), seed in any::<u64>()) {
            let specs: Vec<ModelSpec> = (0..raw.len()).map(|i| svr(1.0, i as f64 * 0.01)).collect();
            let opts = SearchOptions { repeats: 1, ..Default::default() };
            let scores: Vec<Vec<Option<f64>>> = raw.iter().map(|&v| vec![Some(v)]).collect();
            let base = aggregate(&specs, scores.clone(), &opts).unwrap();
            let mut perm: Vec<usize> = (0..raw.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let p_specs: Vec<ModelSpec> = perm.iter().map(|&i| specs[i]).collect();
            let p_scores: Vec<Vec<Option<f64>>> = perm.iter().map(|&i| scores[i].clone()).collect();
            let permuted = aggregate(&p_specs, p_scores, &opts).unwrap();
            prop_assert_eq!(permuted.best_score, base.best_score);
            let unique = raw.iter().filter(|&&v| v == base.best_score).count() == 1;
            if unique {
                prop_assert_eq!(permuted.best, base.best);
            }
        }
    }
}
