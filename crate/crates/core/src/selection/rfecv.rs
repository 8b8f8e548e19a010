use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::search::Metric;
use super::{FeatureMask, MaskProvenance};
use crate::error::{Error, Result};
use crate::features::FeatureCase;
use crate::svr::{svr_fit, svr_predict, KernelKind, SolverOptions, SvrConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfecvOptions {
    pub folds: usize,
    /// Features removed per round.
    pub step: usize,
    pub seed: u64,
    pub metric: Metric,
    pub solver: SolverOptions,
}

impl Default for RfecvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            step: 1,
            seed: 0,
            metric: Metric::Rmse,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfecvStep {
    /// Feature indices in play this round, ascending.
    pub features: Vec<usize>,
    /// Mean cross-validated score; `None` if any fold failed to fit.
    pub mean_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfecvResult {
    pub mask: FeatureMask,
    pub trace: Vec<RfecvStep>,
    pub best_step: usize,
}

fn project(cases: &[&FeatureCase], features: &[usize]) -> Vec<FeatureCase> {
    cases
        .iter()
        .map(|c| FeatureCase {
            features: features.iter().map(|&i| c.features[i]).collect(),
            ..(*c).clone()
        })
        .collect()
}

fn cv_score(
    train: &[FeatureCase],
    fold_of: &[usize],
    features: &[usize],
    svr: &SvrConfig,
    options: &RfecvOptions,
) -> Option<f64> {
    let mut total = 0.0;
    for fold in 0..options.folds {
        let fit: Vec<&FeatureCase> = train.iter().zip(fold_of).filter(|(_, &f)| f != fold).map(|(c, _)| c).collect();
        let held: Vec<&FeatureCase> = train.iter().zip(fold_of).filter(|(_, &f)| f == fold).map(|(c, _)| c).collect();
        let model = svr_fit(&project(&fit, features), svr, &options.solver).ok()?;
        let held = project(&held, features);
        let predictions: Vec<f64> = held.iter().map(|c| svr_predict(&model, &c.features)).collect::<Result<_>>().ok()?;
        let labels: Vec<f64> = held.iter().map(|c| c.label).collect();
        total += options.metric.score(&predictions, &labels).ok()?;
    }
    let mean = total / options.folds as f64;
    mean.is_finite().then_some(mean)
}

/// Recursive feature elimination ranked by `|w_d|` of a linear SVR, scored
/// by k-fold cross-validation at every feature count.
///
/// Folds are assigned round-robin over a seeded shuffle of the cases. The
/// returned mask is the feature set with the lowest mean score; ties go to
/// the smaller set.
pub fn rfecv_select(train: &[FeatureCase], svr: &SvrConfig, options: &RfecvOptions) -> Result<RfecvResult> {
    if svr.kernel.kind != KernelKind::Linear {
        return Err(Error::LinearKernelRequired("rfecv_select"));
    }
    if options.folds < 2 {
        return Err(Error::config("folds", "must be at least 2"));
    }
    if options.step == 0 {
        return Err(Error::config("step", "must be at least 1"));
    }
    if train.len() < options.folds {
        return Err(Error::config(
            "folds",
            alloc::format!("{} folds need at least as many cases, found {}", options.folds, train.len()),
        ));
    }
    let dims = train[0].dims();
    if dims == 0 {
        return Err(Error::Empty("rfecv_select needs at least one feature"));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
    let mut fold_of = alloc::vec![0; train.len()];
    for (position, &case) in order.iter().enumerate() {
        fold_of[case] = position % options.folds;
    }

    let all: Vec<&FeatureCase> = train.iter().collect();
    let mut current: Vec<usize> = (0..dims).collect();
    let mut trace = Vec::new();
    loop {
        let mean_score = cv_score(train, &fold_of, &current, svr, options);
        log::debug!("rfecv: {} features, score {:?}", current.len(), mean_score);
        trace.push(RfecvStep {
            features: current.clone(),
            mean_score,
        });
        if current.len() == 1 {
            break;
        }
        let model = svr_fit(&project(&all, &current), svr, &options.solver)?;
        let weights = model.weights.expect("linear kernel keeps explicit weights");
        let mut ranked: Vec<(f64, usize)> = weights.iter().map(|w| w.abs()).zip(current.iter().copied()).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let drop = options.step.min(current.len() - 1);
        let removed: Vec<usize> = ranked[..drop].iter().map(|&(_, i)| i).collect();
        current.retain(|i| !removed.contains(i));
    }

    let mut best_step = None;
    for (i, step) in trace.iter().enumerate() {
        if let Some(score) = step.mean_score {
            if best_step.is_none_or(|(_, b)| score <= b) {
                best_step = Some((i, score));
            }
        }
    }
    let (best_step, _) = best_step.ok_or(Error::Empty("every rfecv round failed to fit"))?;
    let mask = FeatureMask::from_indices(dims, &trace[best_step].features, MaskProvenance::Rfecv)?;
    Ok(RfecvResult { mask, trace, best_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svr::{KernelSpec, SvrHyper};
    use alloc::vec;
    use rand::Rng;

    fn planted(seed: u64, n: usize) -> Vec<FeatureCase> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
                FeatureCase {
                    player_id: alloc::format!("p{i}"),
                    season: 2010,
                    week: 1,
                    label: 2.0 * x[0] + rng.random_range(-0.05..0.05),
                    features: x,
                }
            })
            .collect()
    }

    fn linear_svr() -> SvrConfig {
        SvrConfig {
            hyper: SvrHyper { c: 1.0, epsilon: 0.01 },
            kernel: KernelSpec::linear(),
        }
    }

    #[test]
    fn keeps_the_planted_feature() {
        let result = rfecv_select(&planted(4, 60), &linear_svr(), &RfecvOptions::default()).unwrap();
        assert!(result.mask.as_slice()[0]);
        assert_eq!(result.trace.len(), 5);
    }

    #[test]
    fn trace_is_strictly_nested() {
        let opts = RfecvOptions { step: 2, ..RfecvOptions::default() };
        let result = rfecv_select(&planted(8, 40), &linear_svr(), &opts).unwrap();
        let counts: Vec<usize> = result.trace.iter().map(|s| s.features.len()).collect();
        assert_eq!(counts, vec![5, 3, 1]);
        for pair in result.trace.windows(2) {
            assert!(pair[1].features.len() < pair[0].features.len());
            assert!(pair[1].features.iter().all(|f| pair[0].features.contains(f)));
        }
    }

    #[test]
    fn single_feature_is_kept() {
        let cases: Vec<FeatureCase> = planted(1, 20)
            .into_iter()
            .map(|mut c| {
                c.features.truncate(1);
                c
            })
            .collect();
        let result = rfecv_select(&cases, &linear_svr(), &RfecvOptions::default()).unwrap();
        assert_eq!(result.mask.active_indices(), vec![0]);
    }

    #[test]
    fn argument_errors() {
        let cases = planted(1, 10);
        let rbf = SvrConfig { kernel: KernelSpec::rbf(0.5), ..linear_svr() };
        assert_eq!(
            rfecv_select(&cases, &rbf, &RfecvOptions::default()).unwrap_err(),
            Error::LinearKernelRequired("rfecv_select")
        );
        assert!(rfecv_select(&cases, &linear_svr(), &RfecvOptions { folds: 1, ..Default::default() }).is_err());
        assert!(rfecv_select(&cases[..3], &linear_svr(), &RfecvOptions::default()).is_err());
    }
}
