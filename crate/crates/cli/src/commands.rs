//! One function per subcommand. Each reads its inputs, writes its outputs
//! under `out_dir` and returns a one-line summary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use gridiron_core::corpus::GameLogCorpus;
use gridiron_core::eval::{error_histogram, evaluate_model, EvalReport};
use gridiron_core::features::{FeatureCase, FEATURE_NAMES};
use gridiron_core::pipeline::{prepare_data, run_pipeline, ModelFamily, PipelineOutput};
use gridiron_core::selection::{
    enumerate_grid, enumerate_mlp_grid, fit_model, rfecv_select, FittedModel, ModelSpec, SelectionResult,
};
use gridiron_core::svr::KernelKind;
use gridiron_core::synth::generate_synthetic;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{self, PredictionRow};
use crate::parallel::parallel_grid_search;

pub const TRAIN_CASES: &str = "train.csv";
pub const TEST_CASES: &str = "test.csv";
pub const TOP_PLAYERS: &str = "top_players.json";

/// A fitted model and the feature columns it expects, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub feature_names: Vec<String>,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub qb_lines: usize,
    pub defense_lines: usize,
    pub players: usize,
    pub seasons: Vec<i32>,
    pub incomplete_cases: usize,
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn load_corpus(config: &RunConfig) -> Result<GameLogCorpus> {
    let qb = config.qb_log()?;
    let defense = config.defense_log()?;
    Ok(io::parse_game_log(qb, Some(defense))?)
}

fn family_name(family: ModelFamily) -> &'static str {
    match family {
        ModelFamily::Svr => "svr",
        ModelFamily::Nn => "nn",
    }
}

pub fn ingest(config: &RunConfig) -> Result<String> {
    let corpus = load_corpus(config)?;
    let summary = CorpusSummary {
        qb_lines: corpus.qb_lines().len(),
        defense_lines: corpus.defense_lines().len(),
        players: corpus.player_ids().len(),
        seasons: corpus.seasons_present().iter().copied().collect(),
        incomplete_cases: corpus.incomplete_cases().len(),
    };
    io::write_json(&out_path(config, "corpus.json"), &summary)?;
    Ok(format!(
        "ingested {} quarterback lines and {} defense lines ({} players, seasons {:?}, {} without an opposing defense line)",
        summary.qb_lines, summary.defense_lines, summary.players, summary.seasons, summary.incomplete_cases
    ))
}

pub fn featurize(config: &RunConfig) -> Result<String> {
    let corpus = load_corpus(config)?;
    let data = prepare_data(&corpus, &config.scoring_rules()?, &config.pipeline()?)?;
    let names = data.mask.active_names();
    io::write_feature_cases(&out_path(config, TRAIN_CASES), &names, &data.train)?;
    io::write_feature_cases(&out_path(config, TEST_CASES), &names, &data.test)?;
    io::write_json(&out_path(config, "normalization.json"), &data.normalization)?;
    io::write_json(&out_path(config, "mask.json"), &data.mask)?;
    io::write_json(&out_path(config, TOP_PLAYERS), &data.top_players)?;
    Ok(format!(
        "featurized {} train and {} test cases over {} features (test season {}, {} dropped)",
        data.train.len(),
        data.test.len(),
        names.len(),
        data.test_season,
        data.dropped_incomplete
    ))
}

fn read_cases(path: &Path) -> Result<io::CaseFile> {
    let file = io::read_feature_cases(path)?;
    ensure!(!file.cases.is_empty(), "{}: no cases", path.display());
    Ok(file)
}

fn train(config: &RunConfig, train_path: &Path, spec: ModelSpec, name: &str) -> Result<String> {
    let file = read_cases(train_path)?;
    let model = fit_model(&spec, &file.cases, &config.solver())?;
    let out = out_path(config, name);
    io::write_json(&out, &ModelFile { feature_names: file.feature_names, model })?;
    Ok(format!("fitted {} on {} cases -> {}", spec.describe(), file.cases.len(), out.display()))
}

pub fn train_svr(config: &RunConfig, train_path: &Path) -> Result<String> {
    train(config, train_path, ModelSpec::Svr(config.svr()), "svr_model.json")
}

pub fn train_nn(config: &RunConfig, train_path: &Path) -> Result<String> {
    train(config, train_path, ModelSpec::Mlp(config.mlp()), "nn_model.json")
}

pub fn rfecv(config: &RunConfig, train_path: &Path) -> Result<String> {
    let file = read_cases(train_path)?;
    ensure!(
        file.feature_names.len() == FEATURE_NAMES.len(),
        "{}: rfecv expects all {} features, found {}",
        train_path.display(),
        FEATURE_NAMES.len(),
        file.feature_names.len()
    );
    if config.svr_kernel != KernelKind::Linear {
        bail!("invalid configuration `svr_kernel`: rfecv ranks features with a linear kernel");
    }
    let result = rfecv_select(&file.cases, &config.svr(), &config.rfecv())?;
    let out = out_path(config, "rfecv.json");
    io::write_json(&out, &result)?;
    Ok(format!(
        "rfecv kept {} of {} features -> {}",
        result.mask.active_count(),
        result.mask.dims(),
        out.display()
    ))
}

pub fn grid_search(config: &RunConfig, train_path: &Path, family: ModelFamily) -> Result<SelectionResult> {
    let file = read_cases(train_path)?;
    let grid = config.grid_spec()?;
    let specs: Vec<ModelSpec> = match family {
        ModelFamily::Svr => enumerate_grid(&grid.svr)?.into_iter().map(ModelSpec::Svr).collect(),
        ModelFamily::Nn => enumerate_mlp_grid(&grid.mlp, &config.mlp())?.into_iter().map(ModelSpec::Mlp).collect(),
    };
    Ok(parallel_grid_search(&file.cases, &specs, &config.search(), config.workers)?)
}

pub fn grid_search_command(config: &RunConfig, train_path: &Path, family: ModelFamily) -> Result<String> {
    let result = grid_search(config, train_path, family)?;
    let out = out_path(config, &format!("selection_{}.json", family_name(family)));
    io::write_json(&out, &result)?;
    Ok(format!(
        "best of {} configurations: {} ({:?} {:.6}) -> {}",
        result.entries.len(),
        result.best.describe(),
        result.metric,
        result.best_score,
        out.display()
    ))
}

pub fn predict(config: &RunConfig, model_path: &Path, cases_path: &Path) -> Result<String> {
    let model: ModelFile = io::read_json(model_path)?;
    let file = read_cases(cases_path)?;
    ensure!(
        file.feature_names == model.feature_names,
        "{}: feature columns do not match the model's ({} vs {})",
        cases_path.display(),
        file.feature_names.len(),
        model.feature_names.len()
    );
    let rows = file
        .cases
        .iter()
        .map(|c| {
            Ok(PredictionRow {
                player_id: c.player_id.clone(),
                season: c.season,
                week: c.week,
                prediction: model.model.predict(&c.features)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = out_path(config, "predictions.csv");
    io::write_predictions(&out, &rows)?;
    Ok(format!("wrote {} predictions -> {}", rows.len(), out.display()))
}

pub fn evaluate(
    config: &RunConfig,
    predictions_path: &Path,
    cases_path: &Path,
    top_path: Option<&Path>,
) -> Result<String> {
    let predictions = io::read_predictions(predictions_path)?;
    let file = read_cases(cases_path)?;
    ensure!(
        predictions.len() == file.cases.len(),
        "length mismatch: {} has {} predictions but {} has {} cases",
        predictions_path.display(),
        predictions.len(),
        cases_path.display(),
        file.cases.len()
    );
    for (i, (p, c)) in predictions.iter().zip(&file.cases).enumerate() {
        ensure!(
            (p.player_id.as_str(), p.season, p.week) == (c.player_id.as_str(), c.season, c.week),
            "row {}: prediction for ({}, {}, {}) lines up with case ({}, {}, {})",
            i + 1,
            p.player_id,
            p.season,
            p.week,
            c.player_id,
            c.season,
            c.week
        );
    }
    let top: BTreeSet<String> = match top_path {
        Some(p) => io::read_json::<Vec<String>>(p)?.into_iter().collect(),
        None => BTreeSet::new(),
    };
    let mut values = predictions.iter().map(|p| p.prediction);
    let evaluation = evaluate_model(
        |_| Ok(values.next().expect("lengths checked")),
        &file.cases,
        &top,
        config.mre_floor,
        &predictions_path.file_stem().map_or("model".into(), |s| s.to_string_lossy()),
        "given",
    )?;
    let report = evaluation.report;
    let abs: Vec<f64> = evaluation.predictions.iter().zip(&file.cases).map(|(p, c)| (p - c.label).abs()).collect();
    io::write_json(&out_path(config, "eval_report.json"), &report)?;
    io::write_text(&out_path(config, "eval_report.csv"), &report_csv([&report]))?;
    io::write_histogram(&out_path(config, "histogram.csv"), &error_histogram(&abs, config.bin_width)?)?;
    Ok(format!(
        "rmse {:.4} mae {:.4} mre {} over {} cases",
        report.rmse_all,
        report.mae_all,
        report.mre_all.map_or("n/a".into(), |m| format!("{m:.4}")),
        report.n_all
    ))
}

fn report_csv<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> String {
    let mut text = String::from(EvalReport::CSV_HEADER);
    text.push('\n');
    for r in reports {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    text
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub players: usize,
    pub seasons: usize,
    pub noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            players: 30,
            seasons: 4,
            noise: 1.0,
        }
    }
}

/// Writes `qb.csv`, `defense.csv`, `truth.json` and a `run.cfg` that
/// points at them.
pub fn synth(config: &RunConfig, options: &SynthOptions) -> Result<String> {
    let s = generate_synthetic(config.seed, options.players, options.seasons, options.noise)?;
    let dir = &config.out_dir;
    io::write_qb_lines(&dir.join("qb.csv"), s.corpus.qb_lines())?;
    io::write_defense_lines(&dir.join("defense.csv"), s.corpus.defense_lines())?;
    io::write_json(&dir.join("truth.json"), &s.truth)?;
    let cfg = format!(
        "qb_log = \"qb.csv\"\ndefense_log = \"defense.csv\"\nout_dir = \"run\"\nseed = {}\n",
        config.seed
    );
    io::write_text(&dir.join("run.cfg"), &cfg)?;
    Ok(format!(
        "generated {} quarterback lines over {} seasons -> {}",
        s.corpus.qb_lines().len(),
        options.seasons,
        dir.display()
    ))
}

/// The full pipeline, with the grid search spread over `config.workers`.
pub fn run_all_output(config: &RunConfig) -> Result<PipelineOutput> {
    let corpus = load_corpus(config)?;
    let rules = config.scoring_rules()?;
    let pipeline = config.pipeline()?;
    let workers = config.workers;
    let runner = move |t: &[FeatureCase], s: &[ModelSpec], o: &gridiron_core::selection::SearchOptions| {
        parallel_grid_search(t, s, o, workers)
    };
    run_pipeline(&corpus, &rules, &pipeline, Some(&runner)).context("run-all failed")
}

pub fn write_run_outputs(config: &RunConfig, output: &PipelineOutput) -> Result<()> {
    let dir = &config.out_dir;
    io::write_json(&dir.join("report.json"), output)?;
    io::write_text(
        &dir.join("report.csv"),
        &report_csv(std::iter::once(&output.baseline).chain(output.runs.iter().map(|r| &r.report))),
    )?;
    io::write_json(&dir.join("mask.json"), &output.mask)?;
    io::write_json(&dir.join("normalization.json"), &output.normalization)?;
    io::write_json(&dir.join(TOP_PLAYERS), &output.top_players)?;
    let names: Vec<String> = output.active_features.clone();
    for run in &output.runs {
        let family = family_name(run.family);
        io::write_histogram(&dir.join(format!("histogram_{family}.csv")), &run.histogram)?;
        let rows: Vec<PredictionRow> = output
            .test_cases
            .iter()
            .zip(&run.predictions)
            .map(|(c, &prediction)| PredictionRow {
                player_id: c.player_id.clone(),
                season: c.season,
                week: c.week,
                prediction,
            })
            .collect();
        io::write_predictions(&dir.join(format!("predictions_{family}.csv")), &rows)?;
        io::write_json(
            &dir.join(format!("{family}_model.json")),
            &ModelFile {
                feature_names: names.clone(),
                model: run.model.clone(),
            },
        )?;
        if let Some(selection) = &run.search {
            io::write_json(&dir.join(format!("selection_{family}.json")), selection)?;
        }
    }
    Ok(())
}

pub fn run_all(config: &RunConfig) -> Result<String> {
    let output = run_all_output(config)?;
    write_run_outputs(config, &output)?;
    let mut parts = vec![format!("baseline mae {:.4}", output.baseline.mae_all)];
    parts.extend(output.runs.iter().map(|r| format!("{} mae {:.4}", r.report.model, r.report.mae_all)));
    Ok(format!(
        "test season {}, {} cases: {} -> {}",
        output.test_season,
        output.n_test,
        parts.join(", "),
        config.out_dir.display()
    ))
}
