use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridiron::commands::{self, SynthOptions, TEST_CASES, TOP_PLAYERS, TRAIN_CASES};
use gridiron::config::load_run_config;
use gridiron_core::pipeline::ModelFamily;

#[derive(Parser)]
#[command(name = "gridiron", version, about = "Fantasy quarterback score prediction with SVR and neural networks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Run configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid-search threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any config key, e.g. `--set svr_c=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Args)]
struct LogArgs {
    /// Quarterback game log; overrides `qb_log`.
    #[arg(long)]
    qb: Option<PathBuf>,
    /// Defense game log; overrides `defense_log`.
    #[arg(long)]
    defense: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Featurized training cases; defaults to `<out>/train.csv`.
    #[arg(long)]
    train: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Svr,
    Nn,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the game logs and summarize them.
    Ingest(LogArgs),
    /// Build, normalize and mask train/test feature cases.
    Featurize(LogArgs),
    /// Fit one SVR with the configured hyperparameters.
    TrainSvr(TrainArgs),
    /// Fit one network with the configured hyperparameters.
    TrainNn(TrainArgs),
    /// Recursive feature elimination with cross-validation.
    Rfecv(TrainArgs),
    /// Repeated hold-out search over the configured grid.
    GridSearch {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_enum, default_value = "svr")]
        family: Family,
    },
    /// Predict featurized cases with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to `<out>/test.csv`.
        #[arg(long)]
        cases: Option<PathBuf>,
    },
    /// Score a predictions file against featurized cases.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Defaults to `<out>/test.csv`.
        #[arg(long)]
        cases: Option<PathBuf>,
        /// JSON list of top player ids; defaults to `<out>/top_players.json` if present.
        #[arg(long)]
        top: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with a planted label function.
    Synth {
        #[arg(long, default_value_t = SynthOptions::default().players)]
        players: usize,
        #[arg(long, default_value_t = SynthOptions::default().seasons)]
        seasons: usize,
        #[arg(long, default_value_t = SynthOptions::default().noise)]
        noise: f64,
    },
    /// The whole pipeline: featurize, select, search, fit, predict, evaluate.
    RunAll(LogArgs),
}

fn path_override(key: &str, path: &Option<PathBuf>) -> Option<String> {
    path.as_ref().map(|p| format!("{key}={}", toml::Value::String(p.to_string_lossy().into_owned())))
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let g = &cli.global;
    let mut overrides = Vec::new();
    overrides.extend(g.seed.map(|s| format!("seed={s}")));
    overrides.extend(path_override("out_dir", &g.out));
    overrides.extend(g.workers.map(|w| format!("workers={w}")));
    if let Command::Ingest(logs) | Command::Featurize(logs) | Command::RunAll(logs) = &cli.command {
        overrides.extend(path_override("qb_log", &logs.qb));
        overrides.extend(path_override("defense_log", &logs.defense));
    }
    overrides.extend(g.overrides.iter().cloned());
    let config = load_run_config(g.config.as_deref(), &overrides)?;
    let in_out = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| config.out_dir.join(name));

    match &cli.command {
        Command::Ingest(_) => commands::ingest(&config),
        Command::Featurize(_) => commands::featurize(&config),
        Command::TrainSvr(a) => commands::train_svr(&config, &in_out(&a.train, TRAIN_CASES)),
        Command::TrainNn(a) => commands::train_nn(&config, &in_out(&a.train, TRAIN_CASES)),
        Command::Rfecv(a) => commands::rfecv(&config, &in_out(&a.train, TRAIN_CASES)),
        Command::GridSearch { train, family } => {
            let family = match family {
                Family::Svr => ModelFamily::Svr,
                Family::Nn => ModelFamily::Nn,
            };
            commands::grid_search_command(&config, &in_out(&train.train, TRAIN_CASES), family)
        }
        Command::Predict { model, cases } => commands::predict(&config, model, &in_out(cases, TEST_CASES)),
        Command::Evaluate { predictions, cases, top } => {
            let top = top.clone().or_else(|| Some(config.out_dir.join(TOP_PLAYERS)).filter(|p| p.is_file()));
            commands::evaluate(&config, predictions, &in_out(cases, TEST_CASES), top.as_deref())
        }
        Command::Synth { players, seasons, noise } => commands::synth(
            &config,
            &SynthOptions {
                players: *players,
                seasons: *seasons,
                noise: *noise,
            },
        ),
        Command::RunAll(_) => commands::run_all(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
