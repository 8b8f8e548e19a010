//! The flat run configuration, its overrides and the auxiliary TOML files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gridiron_core::corpus::FilterColumn;
use gridiron_core::domain::ScoringRules;
use gridiron_core::features::HistoryMode;
use gridiron_core::mlp::{Activation, MlpConfig};
use gridiron_core::pipeline::{ModelFamily, PipelineConfig, SelectionMode};
use gridiron_core::selection::{GridSpec, Metric, RfecvOptions, SearchOptions};
use gridiron_core::svr::{KernelKind, KernelSpec, SolverOptions, SvrConfig, SvrHyper};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.as_deref().map_or("config".into(), |p| p.display().to_string()))]
    Parse { path: Option<PathBuf>, message: String },
    #[error("override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid configuration `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("`{field}`: file {path} does not exist")]
    MissingFile { field: &'static str, path: PathBuf },
}

pub type Result<T, E = ConfigError> = std::result::Result<T, E>;

fn invalid(field: &str, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

/// Every knob of a run. Unknown keys are rejected so typos surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub qb_log: Option<PathBuf>,
    pub defense_log: Option<PathBuf>,
    /// Scoring rules file; the standard system when absent.
    pub scoring: Option<PathBuf>,
    /// Grid file; the published grids when absent.
    pub grid: Option<PathBuf>,
    pub out_dir: PathBuf,

    pub seed: u64,
    pub workers: usize,

    pub min_attempts: u32,
    pub filter_column: FilterColumn,
    pub window: usize,
    pub history_mode: HistoryMode,
    pub ewma_alpha: Option<f64>,
    pub train_seasons: Option<Vec<i32>>,
    pub test_season: Option<i32>,

    pub selection: SelectionMode,
    pub rfecv_folds: usize,
    pub rfecv_step: usize,

    pub models: Vec<ModelFamily>,

    pub svr_search: bool,
    pub svr_kernel: KernelKind,
    pub svr_c: f64,
    pub svr_epsilon: f64,
    pub svr_gamma: f64,
    pub svr_degree: u32,
    pub solver_tol: f64,
    pub solver_max_iter: Option<usize>,

    pub nn_search: bool,
    pub nn_hidden: usize,
    pub nn_activation: Activation,
    pub nn_epochs: usize,
    pub nn_learning_rate: f64,
    pub nn_init_scale: f64,

    pub repeats: usize,
    pub val_fraction: f64,
    pub metric: Metric,

    pub top_n: usize,
    pub mre_floor: f64,
    pub bin_width: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            qb_log: None,
            defense_log: None,
            scoring: None,
            grid: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            workers: 1,
            min_attempts: p.min_attempts,
            filter_column: p.filter_column,
            window: p.window,
            history_mode: p.history_mode,
            ewma_alpha: None,
            train_seasons: None,
            test_season: None,
            selection: p.selection,
            rfecv_folds: p.rfecv_folds,
            rfecv_step: p.rfecv_step,
            models: p.models,
            svr_search: p.svr_search,
            svr_kernel: p.svr.kernel.kind,
            svr_c: p.svr.hyper.c,
            svr_epsilon: p.svr.hyper.epsilon,
            svr_gamma: p.svr.kernel.gamma,
            svr_degree: p.svr.kernel.degree,
            solver_tol: p.search.solver.tol,
            solver_max_iter: p.search.solver.max_iter,
            nn_search: p.nn_search,
            nn_hidden: p.mlp.n_hidden,
            nn_activation: p.mlp.activation,
            nn_epochs: p.mlp.n_epochs,
            nn_learning_rate: p.mlp.learning_rate,
            nn_init_scale: p.mlp.init_scale,
            repeats: p.search.repeats,
            val_fraction: p.search.val_fraction,
            metric: p.search.metric,
            top_n: p.top_n,
            mre_floor: p.mre_floor,
            bin_width: p.bin_width,
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string so
/// `--set selection=manual` works without quotes.
fn parse_value(value: &str) -> toml::Value {
    let wrapped = format!("v = {value}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_owned()),
    }
}

/// Loads a run configuration: the file (if any), then each `key=value`
/// override in order. Relative paths from the file resolve against its
/// directory; paths from overrides stay relative to the working directory.
pub fn load_run_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?;
            text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
                path: Some(p.to_path_buf()),
                message: e.message().to_owned(),
            })?
        }
        None => toml::Table::new(),
    };
    if let Some(base) = path.and_then(Path::parent) {
        for key in PATH_KEYS {
            if let Some(toml::Value::String(s)) = table.get_mut(key) {
                let p = Path::new(s.as_str());
                if p.is_relative() {
                    *s = base.join(p).to_string_lossy().into_owned();
                }
            }
        }
    }
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .filter(|(k, _)| !k.trim().is_empty())
            .ok_or_else(|| ConfigError::Override(item.clone()))?;
        table.insert(key.trim().to_owned(), parse_value(value.trim()));
    }
    let config: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse {
        path: path.map(Path::to_path_buf),
        message: e.message().to_owned(),
    })?;
    config.validate()?;
    Ok(config)
}

const PATH_KEYS: [&str; 5] = ["qb_log", "defense_log", "scoring", "grid", "out_dir"];

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        SvrHyper { c: self.svr_c, epsilon: self.svr_epsilon }
            .validate()
            .map_err(|e| rename(e, &[("c", "svr_c"), ("epsilon", "svr_epsilon")]))?;
        self.kernel().validate().map_err(|e| rename(e, &[("gamma", "svr_gamma"), ("degree", "svr_degree")]))?;
        self.mlp().validate().map_err(|e| {
            rename(
                e,
                &[
                    ("n_hidden", "nn_hidden"),
                    ("n_epochs", "nn_epochs"),
                    ("learning_rate", "nn_learning_rate"),
                    ("init_scale", "nn_init_scale"),
                ],
            )
        })?;
        self.search().validate()?;
        if !(self.solver_tol > 0.0) {
            return Err(invalid("solver_tol", "must be positive"));
        }
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        if let Some(a) = self.ewma_alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid("ewma_alpha", format!("{a} outside [0, 1]")));
            }
        }
        if self.history_mode == HistoryMode::Ewma && self.ewma_alpha.is_none() {
            return Err(invalid("ewma_alpha", "required when history_mode is ewma"));
        }
        if self.models.is_empty() {
            return Err(invalid("models", "choose at least one of \"svr\", \"nn\""));
        }
        if self.rfecv_folds < 2 {
            return Err(invalid("rfecv_folds", "must be at least 2"));
        }
        if self.rfecv_step == 0 {
            return Err(invalid("rfecv_step", "must be at least 1"));
        }
        if self.top_n == 0 {
            return Err(invalid("top_n", "must be at least 1"));
        }
        if !(self.mre_floor >= 0.0) {
            return Err(invalid("mre_floor", "must be >= 0"));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(invalid("bin_width", "must be positive"));
        }
        if self.train_seasons.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("train_seasons", "must name at least one season"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec {
            kind: self.svr_kernel,
            gamma: self.svr_gamma,
            degree: self.svr_degree,
            coef0: 0.0,
        }
    }

    pub fn svr(&self) -> SvrConfig {
        SvrConfig {
            hyper: SvrHyper { c: self.svr_c, epsilon: self.svr_epsilon },
            kernel: self.kernel(),
        }
    }

    pub fn mlp(&self) -> MlpConfig {
        MlpConfig {
            n_hidden: self.nn_hidden,
            activation: self.nn_activation,
            n_epochs: self.nn_epochs,
            learning_rate: self.nn_learning_rate,
            seed: self.seed,
            init_scale: self.nn_init_scale,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
        }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions {
            repeats: self.repeats,
            val_fraction: self.val_fraction,
            seed: self.seed,
            metric: self.metric,
            solver: self.solver(),
        }
    }

    pub fn rfecv(&self) -> RfecvOptions {
        RfecvOptions {
            folds: self.rfecv_folds,
            step: self.rfecv_step,
            seed: self.seed,
            metric: self.metric,
            solver: self.solver(),
        }
    }

    pub fn qb_log(&self) -> Result<&Path> {
        existing("qb_log", self.qb_log.as_deref())
    }

    pub fn defense_log(&self) -> Result<&Path> {
        existing("defense_log", self.defense_log.as_deref())
    }

    pub fn scoring_rules(&self) -> Result<ScoringRules> {
        match &self.scoring {
            Some(p) => load_scoring_rules(existing("scoring", Some(p))?),
            None => Ok(ScoringRules::default()),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match &self.grid {
            Some(p) => load_grid(existing("grid", Some(p))?),
            None => Ok(GridSpec::default()),
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let grid = self.grid_spec()?;
        Ok(PipelineConfig {
            seed: self.seed,
            min_attempts: self.min_attempts,
            filter_column: self.filter_column,
            window: self.window,
            history_mode: self.history_mode,
            ewma_alpha: self.ewma_alpha,
            train_seasons: self.train_seasons.as_ref().map(|s| s.iter().copied().collect::<BTreeSet<_>>()),
            test_season: self.test_season,
            selection: self.selection,
            rfecv_folds: self.rfecv_folds,
            rfecv_step: self.rfecv_step,
            models: self.models.clone(),
            svr: self.svr(),
            svr_search: self.svr_search,
            svr_grid: grid.svr,
            mlp: self.mlp(),
            nn_search: self.nn_search,
            mlp_grid: grid.mlp,
            search: self.search(),
            top_n: self.top_n,
            mre_floor: self.mre_floor,
            bin_width: self.bin_width,
        })
    }
}

fn rename(err: gridiron_core::Error, names: &[(&str, &str)]) -> ConfigError {
    match err {
        gridiron_core::Error::Config { field, reason } => {
            let field = names.iter().find(|(from, _)| *from == field).map_or(field, |(_, to)| to);
            invalid(field, reason)
        }
        other => invalid("config", other),
    }
}

impl From<gridiron_core::Error> for ConfigError {
    fn from(err: gridiron_core::Error) -> Self {
        rename(err, &[])
    }
}

fn existing<'a>(field: &'static str, path: Option<&'a Path>) -> Result<&'a Path> {
    let path = path.ok_or_else(|| invalid(field, "not set"))?;
    if !path.is_file() {
        return Err(ConfigError::MissingFile {
            field,
            path: path.to_path_buf(),
        });
    }
    Ok(path)
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: Some(path.to_path_buf()),
        message: e.message().to_owned(),
    })
}

/// A table per category: `[pass_yards] points = 1, per = 25`.
pub fn load_scoring_rules(path: &Path) -> Result<ScoringRules> {
    read_toml(path)
}

/// `[svr]` and `[mlp]` sections; missing keys take the published values.
pub fn load_grid(path: &Path) -> Result<GridSpec> {
    let grid: GridSpec = read_toml(path)?;
    grid.svr.validate()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(load_run_config(None, &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides_parse_typed_and_bare_values() {
        let c = load_run_config(
            None,
            &["seed=9".into(), "selection=manual".into(), "models=[\"nn\"]".into(), "svr_c=0.5".into()],
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.selection, SelectionMode::Manual);
        assert_eq!(c.models, vec![ModelFamily::Nn]);
        assert_eq!(c.svr_c, 0.5);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = load_run_config(None, &["sead=1".into()]).unwrap_err().to_string();
        assert!(err.contains("sead"), "{err}");
    }

    #[test]
    fn invalid_value_names_field() {
        let err = load_run_config(None, &["svr_c=2".into()]).unwrap_err().to_string();
        assert!(err.contains("`svr_c`"), "{err}");
        let err = load_run_config(None, &["history_mode=\"ewma\"".into()]).unwrap_err().to_string();
        assert!(err.contains("`ewma_alpha`"), "{err}");
    }

    #[test]
    fn malformed_override() {
        assert!(matches!(load_run_config(None, &["seed".into()]), Err(ConfigError::Override(_))));
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "qb_log = \"qb.csv\"\nout_dir = \"/abs/out\"\n").unwrap();
        let c = load_run_config(Some(&path), &[]).unwrap();
        assert_eq!(c.qb_log.unwrap(), dir.path().join("qb.csv"));
        assert_eq!(c.out_dir, PathBuf::from("/abs/out"));
    }
}
