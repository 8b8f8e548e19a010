//! End-to-end run: featurize, split by season, normalize, select features,
//! search hyperparameters, fit, predict and evaluate.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_qb_cases_by, FilterColumn, GameLogCorpus};
use crate::domain::{rank_top_players, score_stat_line, PlayerPoints, ScoringRules};
use crate::error::{Error, Result};
use crate::eval::{error_histogram, evaluate_model, EvalReport, HistogramBin, DEFAULT_MRE_FLOOR, DEFAULT_TOP_N};
use crate::features::{
    build_feature_cases, default_season_split, split_by_season, EwmaConfig, FeatureCase, FeatureConfig,
    HistoryMode,
};
use crate::mlp::MlpConfig;
use crate::normalize::{minmax_fit_apply, NormalizationParams};
use crate::selection::{
    enumerate_grid, enumerate_mlp_grid, fit_model, manual_mask, rfecv_select, FeatureMask, FittedModel,
    MlpGrid, ModelSpec, RfecvOptions, SearchOptions, SelectionResult, SvrGrid,
};
use crate::svr::{KernelKind, SvrConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    None,
    Manual,
    Rfecv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Svr,
    Nn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub min_attempts: u32,
    pub filter_column: FilterColumn,
    pub window: usize,
    pub history_mode: HistoryMode,
    /// Smoothing factor when `history_mode` is EWMA. The recurrence starts
    /// from the rookie baseline.
    pub ewma_alpha: Option<f64>,
    /// Defaults to every season but the first and last.
    pub train_seasons: Option<BTreeSet<i32>>,
    /// Defaults to the last season.
    pub test_season: Option<i32>,
    pub selection: SelectionMode,
    pub rfecv_folds: usize,
    pub rfecv_step: usize,
    pub models: Vec<ModelFamily>,
    /// Used as-is unless `svr_search` is set; also the RFECV ranker when
    /// its kernel is linear.
    pub svr: SvrConfig,
    pub svr_search: bool,
    pub svr_grid: SvrGrid,
    pub mlp: MlpConfig,
    pub nn_search: bool,
    pub mlp_grid: MlpGrid,
    pub search: SearchOptions,
    pub top_n: usize,
    pub mre_floor: f64,
    pub bin_width: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            min_attempts: 5,
            filter_column: FilterColumn::Attempts,
            window: 10,
            history_mode: HistoryMode::PlainAverage,
            ewma_alpha: None,
            train_seasons: None,
            test_season: None,
            selection: SelectionMode::None,
            rfecv_folds: 5,
            rfecv_step: 1,
            models: alloc::vec![ModelFamily::Svr, ModelFamily::Nn],
            svr: SvrConfig::default(),
            svr_search: true,
            svr_grid: SvrGrid::default(),
            mlp: MlpConfig::default(),
            nn_search: false,
            mlp_grid: MlpGrid::default(),
            search: SearchOptions::default(),
            top_n: DEFAULT_TOP_N,
            mre_floor: DEFAULT_MRE_FLOOR,
            bin_width: crate::eval::DEFAULT_BIN_WIDTH,
        }
    }
}

/// One fitted model family and how it scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub family: ModelFamily,
    pub spec: ModelSpec,
    pub search: Option<SelectionResult>,
    pub model: FittedModel,
    pub report: EvalReport,
    pub predictions: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub train_seasons: BTreeSet<i32>,
    pub test_season: i32,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped_incomplete: usize,
    pub normalization: NormalizationParams,
    pub mask: FeatureMask,
    pub active_features: Vec<String>,
    pub top_players: Vec<String>,
    /// Predicting the training-label mean for every case.
    pub baseline: EvalReport,
    pub runs: Vec<ModelRun>,
    /// Test cases in evaluation order, normalized and masked.
    #[serde(skip)]
    pub test_cases: Vec<FeatureCase>,
}

/// How a list of configurations is searched. The default runs
/// [`crate::selection::grid_search`]; callers can substitute a parallel
/// runner as long as it returns the same result.
pub type GridRunner<'a> = &'a dyn Fn(&[FeatureCase], &[ModelSpec], &SearchOptions) -> Result<SelectionResult>;

fn season_split(corpus: &GameLogCorpus, config: &PipelineConfig) -> Result<(BTreeSet<i32>, i32)> {
    let (default_train, default_test) = default_season_split(corpus.seasons_present())?;
    let test = config.test_season.unwrap_or(default_test);
    let train = match &config.train_seasons {
        Some(t) => t.clone(),
        None if config.test_season.is_some() => {
            corpus.seasons_present().iter().copied().filter(|&s| s < test).collect()
        }
        None => default_train,
    };
    Ok((train, test))
}

/// Top players by test-season fantasy total, capped at the number present.
fn top_players(corpus: &GameLogCorpus, rules: &ScoringRules, season: i32, n: usize) -> Result<Vec<String>> {
    let scored: Vec<(&str, f64)> = corpus
        .qb_lines()
        .iter()
        .filter(|l| l.season == season)
        .map(|l| Ok((l.player_id.as_str(), score_stat_line(l, rules)?)))
        .collect::<Result<_>>()?;
    let available = scored.iter().map(|(id, _)| *id).collect::<BTreeSet<_>>().len();
    if available < n {
        log::warn!("only {available} players in {season}; top set shrinks from {n}");
    }
    let n = n.min(available);
    if n == 0 {
        return Ok(Vec::new());
    }
    rank_top_players(
        scored.iter().map(|&(player_id, points)| PlayerPoints {
            player_id,
            season,
            points,
        }),
        season,
        n,
    )
}

fn model_specs(family: ModelFamily, config: &PipelineConfig) -> Result<(Vec<ModelSpec>, bool)> {
    Ok(match family {
        ModelFamily::Svr if config.svr_search => {
            (enumerate_grid(&config.svr_grid)?.into_iter().map(ModelSpec::Svr).collect(), true)
        }
        ModelFamily::Svr => (alloc::vec![ModelSpec::Svr(config.svr)], false),
        ModelFamily::Nn => {
            let base = MlpConfig {
                seed: config.seed,
                ..config.mlp
            };
            if config.nn_search {
                (enumerate_mlp_grid(&config.mlp_grid, &base)?.into_iter().map(ModelSpec::Mlp).collect(), true)
            } else {
                (alloc::vec![ModelSpec::Mlp(base)], false)
            }
        }
    })
}

/// Normalized, masked train and test cases plus everything derived while
/// building them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedData {
    pub train_seasons: BTreeSet<i32>,
    pub test_season: i32,
    pub dropped_incomplete: usize,
    pub normalization: NormalizationParams,
    pub mask: FeatureMask,
    pub top_players: Vec<String>,
    pub train: Vec<FeatureCase>,
    pub test: Vec<FeatureCase>,
}

/// Featurize, split by season, normalize on train and apply the selection
/// mode. The shared front half of every run.
pub fn prepare_data(corpus: &GameLogCorpus, rules: &ScoringRules, config: &PipelineConfig) -> Result<PreparedData> {
    let (train_seasons, test_season) = season_split(corpus, config)?;

    let mut features = FeatureConfig::fitted(corpus, &train_seasons)?;
    features.window = config.window;
    features.history_mode = config.history_mode;
    if config.history_mode == HistoryMode::Ewma {
        let alpha = config
            .ewma_alpha
            .ok_or_else(|| Error::config("ewma_alpha", "required when history_mode is ewma"))?;
        features.ewma = Some(EwmaConfig::new(alpha, features.rookie_baseline)?);
    }
    let cases = filter_qb_cases_by(corpus, config.min_attempts, config.filter_column);
    let built = build_feature_cases(corpus, &cases, rules, &features)?;
    let split = split_by_season(&built.cases, &train_seasons, test_season)?;
    let (normalization, train, mut others) = minmax_fit_apply(&split.train, &[&split.test])?;
    let test = others.pop().expect("one held-out set");

    let mask = match config.selection {
        SelectionMode::None => FeatureMask::all(normalization.dims()),
        SelectionMode::Manual => manual_mask(),
        SelectionMode::Rfecv => {
            let ranker = if config.svr.kernel.kind == KernelKind::Linear {
                config.svr
            } else {
                SvrConfig::default()
            };
            let options = RfecvOptions {
                folds: config.rfecv_folds,
                step: config.rfecv_step,
                seed: config.seed,
                metric: config.search.metric,
                solver: config.search.solver,
            };
            rfecv_select(&train, &ranker, &options)?.mask
        }
    };
    let train = mask.apply_cases(&train)?;
    let test = mask.apply_cases(&test)?;
    let top_players = top_players(corpus, rules, test_season, config.top_n)?;

    Ok(PreparedData {
        train_seasons,
        test_season,
        dropped_incomplete: built.dropped_incomplete,
        normalization,
        mask,
        top_players,
        train,
        test,
    })
}

pub fn run_pipeline(
    corpus: &GameLogCorpus,
    rules: &ScoringRules,
    config: &PipelineConfig,
    runner: Option<GridRunner<'_>>,
) -> Result<PipelineOutput> {
    if config.models.is_empty() {
        return Err(Error::config("models", "choose at least one model family"));
    }
    let PreparedData {
        train_seasons,
        test_season,
        dropped_incomplete,
        normalization,
        mask,
        top_players: top,
        train,
        test,
    } = prepare_data(corpus, rules, config)?;
    let mask_name = mask.provenance().name();
    let top_ids: BTreeSet<String> = top.iter().cloned().collect();

    let train_mean = train.iter().map(|c| c.label).sum::<f64>() / train.len() as f64;
    let baseline = evaluate_model(|_| Ok(train_mean), &test, &top_ids, config.mre_floor, "mean", mask_name)?.report;

    let search = SearchOptions {
        seed: config.seed,
        ..config.search
    };
    let default_runner = |t: &[FeatureCase], s: &[ModelSpec], o: &SearchOptions| crate::selection::grid_search(t, s, o);
    let runner: GridRunner<'_> = runner.unwrap_or(&default_runner);

    let mut families = config.models.clone();
    families.sort_unstable();
    families.dedup();
    let mut runs = Vec::with_capacity(families.len());
    for family in families {
        let (specs, searched) = model_specs(family, config)?;
        let selection = if searched { Some(runner(&train, &specs, &search)?) } else { None };
        let spec = selection.as_ref().map_or(specs[0], |s| s.best);
        let model = fit_model(&spec, &train, &search.solver)?;
        let evaluation = evaluate_model(|x| model.predict(x), &test, &top_ids, config.mre_floor, &spec.describe(), mask_name)?;
        let abs_errors: Vec<f64> = evaluation
            .predictions
            .iter()
            .zip(&test)
            .map(|(p, c)| (p - c.label).abs())
            .collect();
        runs.push(ModelRun {
            family,
            spec,
            search: selection,
            model,
            report: evaluation.report,
            histogram: error_histogram(&abs_errors, config.bin_width)?,
            predictions: evaluation.predictions,
        });
    }

    Ok(PipelineOutput {
        train_seasons,
        test_season,
        n_train: train.len(),
        n_test: test.len(),
        dropped_incomplete,
        active_features: mask.active_names().into_iter().map(String::from).collect(),
        normalization,
        mask,
        top_players: top,
        baseline,
        runs,
        test_cases: test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_synthetic;

    fn quick_config() -> PipelineConfig {
        PipelineConfig {
            svr_search: false,
            mlp: MlpConfig { n_epochs: 20, n_hidden: 10, ..MlpConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn runs_on_synthetic_corpus() {
        let s = generate_synthetic(7, 12, 4, 1.0).unwrap();
        let out = run_pipeline(&s.corpus, &ScoringRules::default(), &quick_config(), None).unwrap();
        assert_eq!(out.runs.len(), 2);
        assert_eq!(out.test_season, s.truth.test_season);
        assert_eq!(out.train_seasons, s.truth.train_seasons);
        assert_eq!(out.mask.active_count(), 34);
        assert!(out.top_players.len() <= 24);
        for run in &out.runs {
            assert_eq!(run.predictions.len(), out.n_test);
            assert_eq!(run.histogram.iter().map(|b| b.count).sum::<usize>(), out.n_test);
        }
    }

    #[test]
    fn manual_selection_shrinks_inputs() {
        let s = generate_synthetic(3, 8, 3, 1.0).unwrap();
        let cfg = PipelineConfig {
            selection: SelectionMode::Manual,
            models: alloc::vec![ModelFamily::Svr],
            ..quick_config()
        };
        let out = run_pipeline(&s.corpus, &ScoringRules::default(), &cfg, None).unwrap();
        assert_eq!(out.runs[0].model.dims(), 30);
        assert_eq!(out.active_features.len(), 30);
        assert_eq!(out.runs[0].report.mask, "manual");
    }

    #[test]
    fn ewma_requires_alpha() {
        let s = generate_synthetic(3, 8, 3, 1.0).unwrap();
        let cfg = PipelineConfig {
            history_mode: HistoryMode::Ewma,
            ..quick_config()
        };
        let err = run_pipeline(&s.corpus, &ScoringRules::default(), &cfg, None).unwrap_err();
        assert!(matches!(err, Error::Config { field: "ewma_alpha", .. }));
    }

    #[test]
    fn deterministic() {
        let s = generate_synthetic(5, 8, 3, 1.0).unwrap();
        let a = run_pipeline(&s.corpus, &ScoringRules::default(), &quick_config(), None).unwrap();
        let b = run_pipeline(&s.corpus, &ScoringRules::default(), &quick_config(), None).unwrap();
        assert_eq!(a, b);
    }
}
