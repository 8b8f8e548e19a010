//! Labeled feature cases built from game history.
//!
//! Layout of the 34-element feature vector:
//!
//! | index    | content                                          |
//! |----------|--------------------------------------------------|
//! | 0        | age                                              |
//! | 1        | experience                                       |
//! | 2..=13   | previous game, 12 QB categories                  |
//! | 14..=25  | mean of the last `window` games, 12 QB categories|
//! | 26..=29  | opposing defense, previous game                  |
//! | 30..=33  | opposing defense, mean of last `window` games    |
//!
//! Every history slot only looks at games strictly earlier than the case's
//! own `(season, week)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::GameLogCorpus;
use crate::domain::{
    DefenseCategory, DefenseStatLine, DefenseStats, QbStats, ScoringRules, StatCategory, StatLine,
    DEFENSE_CATEGORIES, QB_CATEGORIES,
};
use crate::error::{Error, Result};

pub const FEATURE_COUNT: usize = 2 + 2 * QB_CATEGORIES + 2 * DEFENSE_CATEGORIES;

pub const AGE: usize = 0;
pub const EXPERIENCE: usize = 1;
pub const PREV_QB_START: usize = 2;
pub const AVG_QB_START: usize = PREV_QB_START + QB_CATEGORIES;
pub const OPP_PREV_START: usize = AVG_QB_START + QB_CATEGORIES;
pub const OPP_AVG_START: usize = OPP_PREV_START + DEFENSE_CATEGORIES;

/// Canonical feature names, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "age",
    "experience",
    "prev_pass_attempts",
    "prev_pass_completions",
    "prev_pass_yards",
    "prev_pass_tds",
    "prev_interceptions",
    "prev_rush_attempts",
    "prev_rush_yards",
    "prev_rush_tds",
    "prev_fumbles_lost",
    "prev_fumbles_total",
    "prev_two_pt_pass",
    "prev_two_pt_rush",
    "avg_pass_attempts",
    "avg_pass_completions",
    "avg_pass_yards",
    "avg_pass_tds",
    "avg_interceptions",
    "avg_rush_attempts",
    "avg_rush_yards",
    "avg_rush_tds",
    "avg_fumbles_lost",
    "avg_fumbles_total",
    "avg_two_pt_pass",
    "avg_two_pt_rush",
    "opp_prev_points_allowed",
    "opp_prev_pass_yards_allowed",
    "opp_prev_rush_yards_allowed",
    "opp_prev_turnovers_forced",
    "opp_avg_points_allowed",
    "opp_avg_pass_yards_allowed",
    "opp_avg_rush_yards_allowed",
    "opp_avg_turnovers_forced",
];

pub const fn prev_qb_index(category: StatCategory) -> usize {
    PREV_QB_START + category.index()
}

pub const fn avg_qb_index(category: StatCategory) -> usize {
    AVG_QB_START + category.index()
}

pub const fn opp_prev_index(category: DefenseCategory) -> usize {
    OPP_PREV_START + category.index()
}

pub const fn opp_avg_index(category: DefenseCategory) -> usize {
    OPP_AVG_START + category.index()
}

/// One labeled case. `features` has [`FEATURE_COUNT`] entries when built
/// here; masked copies may be shorter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCase {
    pub player_id: String,
    pub season: i32,
    pub week: u32,
    pub features: Vec<f64>,
    pub label: f64,
}

impl FeatureCase {
    pub fn dims(&self) -> usize {
        self.features.len()
    }
}

/// What fills the previous-game slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryMode {
    /// The most recent prior game.
    #[default]
    PlainAverage,
    /// Exponentially weighted average over the whole prior career.
    Ewma,
}

/// Parameters of the recurrence `S_t = alpha * G_t + (1 - alpha) * S_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaConfig {
    pub alpha: f64,
    /// Seed value `S_0`.
    pub initial: QbStats,
}

impl EwmaConfig {
    pub fn new(alpha: f64, initial: QbStats) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config("ewma_alpha", format!("{alpha} outside [0, 1]")));
        }
        Ok(Self { alpha, initial })
    }
}

/// Applies the EWMA recurrence category-wise over `history` (oldest first)
/// and returns the value after the last game.
pub fn ewma_smooth<'a, I>(history: I, config: &EwmaConfig) -> QbStats
where
    I: IntoIterator<Item = &'a QbStats>,
{
    let mut state = config.initial;
    for game in history {
        for (s, g) in state.0.iter_mut().zip(game.0) {
            *s = config.alpha * g + (1.0 - config.alpha) * *s;
        }
    }
    state
}

/// Mean over first-year quarterbacks of each one's per-game average during
/// their first season, restricted to `seasons`.
///
/// Averaging is two-level: a rookie with twelve games counts the same as
/// one with two.
pub fn rookie_baseline(corpus: &GameLogCorpus, seasons: &BTreeSet<i32>) -> Result<QbStats> {
    let mut per_rookie: BTreeMap<(&str, i32), Vec<&QbStats>> = BTreeMap::new();
    for line in corpus.qb_lines() {
        if line.is_first_year() && seasons.contains(&line.season) {
            per_rookie
                .entry((line.player_id.as_str(), line.season))
                .or_default()
                .push(&line.stats);
        }
    }
    let rookie_means: Vec<QbStats> = per_rookie
        .values()
        .filter_map(|games| QbStats::mean(games.iter().copied()))
        .collect();
    QbStats::mean(&rookie_means).ok_or(Error::NoRookies)
}

/// Mean defense line over `seasons`; the fallback for opponents without
/// prior games.
pub fn league_average_defense(
    corpus: &GameLogCorpus,
    seasons: &BTreeSet<i32>,
) -> Result<DefenseStats> {
    DefenseStats::mean(
        corpus
            .defense_lines()
            .iter()
            .filter(|l| seasons.contains(&l.season))
            .map(|l| &l.stats),
    )
    .ok_or(Error::Empty("no defense lines in the training seasons"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window: usize,
    pub history_mode: HistoryMode,
    pub ewma: Option<EwmaConfig>,
    /// Fills both QB history blocks for a player's first game.
    pub rookie_baseline: QbStats,
    /// Fills both defense blocks when the opponent has no prior game.
    pub league_defense: DefenseStats,
}

impl FeatureConfig {
    pub fn new(rookie_baseline: QbStats, league_defense: DefenseStats) -> Self {
        Self {
            window: 10,
            history_mode: HistoryMode::PlainAverage,
            ewma: None,
            rookie_baseline,
            league_defense,
        }
    }

    /// Baselines fitted on `train_seasons` of `corpus`.
    pub fn fitted(corpus: &GameLogCorpus, train_seasons: &BTreeSet<i32>) -> Result<Self> {
        Ok(Self::new(
            rookie_baseline(corpus, train_seasons)?,
            league_average_defense(corpus, train_seasons)?,
        ))
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if self.history_mode == HistoryMode::Ewma {
            let ewma = self
                .ewma
                .as_ref()
                .ok_or_else(|| Error::config("ewma_alpha", "required when history_mode is ewma"))?;
            EwmaConfig::new(ewma.alpha, ewma.initial)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBuild {
    pub cases: Vec<FeatureCase>,
    /// Cases dropped because the opposing defense has no line for the game.
    pub dropped_incomplete: usize,
}

type GameKey = (i32, u32);

struct History<'a> {
    qb: BTreeMap<&'a str, Vec<&'a StatLine>>,
    defense: BTreeMap<&'a str, Vec<&'a DefenseStatLine>>,
}

impl<'a> History<'a> {
    fn new(corpus: &'a GameLogCorpus) -> Self {
        let mut qb: BTreeMap<&str, Vec<&StatLine>> = BTreeMap::new();
        for line in corpus.qb_lines() {
            qb.entry(line.player_id.as_str()).or_default().push(line);
        }
        qb.values_mut().for_each(|g| g.sort_by_key(|l| (l.season, l.week)));
        let mut defense: BTreeMap<&str, Vec<&DefenseStatLine>> = BTreeMap::new();
        for line in corpus.defense_lines() {
            defense.entry(line.team.as_str()).or_default().push(line);
        }
        defense.values_mut().for_each(|g| g.sort_by_key(|l| (l.season, l.week)));
        Self { qb, defense }
    }

    fn qb_before(&self, player: &str, at: GameKey) -> &[&'a StatLine] {
        match self.qb.get(player) {
            Some(games) => &games[..games.partition_point(|l| (l.season, l.week) < at)],
            None => &[],
        }
    }

    fn defense_before(&self, team: &str, at: GameKey) -> &[&'a DefenseStatLine] {
        match self.defense.get(team) {
            Some(games) => &games[..games.partition_point(|l| (l.season, l.week) < at)],
            None => &[],
        }
    }

    fn contains_qb(&self, line: &StatLine) -> bool {
        self.qb.get(line.player_id.as_str()).is_some_and(|games| {
            games
                .binary_search_by_key(&(line.season, line.week), |l| (l.season, l.week))
                .is_ok()
        })
    }

    fn has_defense(&self, team: &str, at: GameKey) -> bool {
        self.defense.get(team).is_some_and(|games| {
            games.binary_search_by_key(&at, |l| (l.season, l.week)).is_ok()
        })
    }
}

fn tail<T>(items: &[T], window: usize) -> &[T] {
    &items[items.len().saturating_sub(window)..]
}

/// Builds one case per line in `cases`, labeled with that game's fantasy
/// score. Cases whose opponent has no defense line for the same game are
/// dropped and counted.
pub fn build_feature_cases(
    corpus: &GameLogCorpus,
    cases: &[StatLine],
    rules: &ScoringRules,
    config: &FeatureConfig,
) -> Result<FeatureBuild> {
    config.validate()?;
    let history = History::new(corpus);
    let mut out = Vec::with_capacity(cases.len());
    let mut dropped_incomplete = 0;

    for line in cases {
        if !history.contains_qb(line) {
            return Err(Error::InvalidRecord {
                key: format!("({}, {}, {})", line.player_id, line.season, line.week),
                reason: "case is not part of the corpus".into(),
            });
        }
        let at = (line.season, line.week);
        if !history.has_defense(&line.opponent, at) {
            dropped_incomplete += 1;
            continue;
        }

        let mut features = Vec::with_capacity(FEATURE_COUNT);
        features.push(line.age);
        features.push(line.experience);

        let prior = history.qb_before(&line.player_id, at);
        let (prev, avg) = if prior.is_empty() {
            (config.rookie_baseline, config.rookie_baseline)
        } else {
            let prev = match (config.history_mode, &config.ewma) {
                (HistoryMode::Ewma, Some(ewma)) => ewma_smooth(prior.iter().map(|l| &l.stats), ewma),
                _ => prior[prior.len() - 1].stats,
            };
            let avg = QbStats::mean(tail(prior, config.window).iter().map(|l| &l.stats))
                .unwrap_or(config.rookie_baseline);
            (prev, avg)
        };
        features.extend_from_slice(prev.as_slice());
        features.extend_from_slice(avg.as_slice());

        let opp = history.defense_before(&line.opponent, at);
        let (opp_prev, opp_avg) = match opp.last() {
            None => (config.league_defense, config.league_defense),
            Some(last) => (
                last.stats,
                DefenseStats::mean(tail(opp, config.window).iter().map(|l| &l.stats))
                    .unwrap_or(config.league_defense),
            ),
        };
        features.extend_from_slice(opp_prev.as_slice());
        features.extend_from_slice(opp_avg.as_slice());
        debug_assert_eq!(features.len(), FEATURE_COUNT);

        out.push(FeatureCase {
            player_id: line.player_id.clone(),
            season: line.season,
            week: line.week,
            features,
            label: rules.score(&line.stats)?,
        });
    }

    if dropped_incomplete > 0 {
        log::info!("dropped {dropped_incomplete} cases without an opposing-defense line");
    }
    Ok(FeatureBuild {
        cases: out,
        dropped_incomplete,
    })
}

/// Train/test partition by season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<FeatureCase>,
    pub test: Vec<FeatureCase>,
    pub train_seasons: BTreeSet<i32>,
    pub test_seasons: BTreeSet<i32>,
    /// Cases whose season is in neither set.
    pub dropped: usize,
}

pub fn split_by_season(
    cases: &[FeatureCase],
    train_seasons: &BTreeSet<i32>,
    test_season: i32,
) -> Result<DatasetSplit> {
    if train_seasons.contains(&test_season) {
        return Err(Error::config(
            "test_season",
            format!("{test_season} is also a training season"),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut dropped = 0;
    for case in cases {
        if train_seasons.contains(&case.season) {
            train.push(case.clone());
        } else if case.season == test_season {
            test.push(case.clone());
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::info!("{dropped} cases fall outside the train and test seasons");
    }
    if train.is_empty() {
        return Err(Error::EmptyPartition("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptyPartition("test"));
    }
    Ok(DatasetSplit {
        train,
        test,
        train_seasons: train_seasons.clone(),
        test_seasons: BTreeSet::from([test_season]),
        dropped,
    })
}

/// The latest season is the test season. Earlier seasons train, except that
/// with three or more seasons the earliest one only supplies history.
pub fn default_season_split(seasons: &BTreeSet<i32>) -> Result<(BTreeSet<i32>, i32)> {
    if seasons.len() < 2 {
        return Err(Error::config("seasons", "need at least two seasons to split"));
    }
    let test = *seasons.last().expect("nonempty");
    let skip = usize::from(seasons.len() >= 3);
    let train = seasons.iter().copied().filter(|&s| s != test).skip(skip).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::filter_qb_cases;
    use crate::domain::ScoringRules;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn stats_with(seed: f64) -> QbStats {
        let mut s = QbStats::zero();
        for (i, v) in s.0.iter_mut().enumerate() {
            *v = seed * (i as f64 + 1.0);
        }
        s[StatCategory::PassCompletions] = 0.0;
        s
    }

    fn qb(id: &str, season: i32, week: u32, experience: f64, stats: QbStats) -> StatLine {
        StatLine {
            player_id: id.into(),
            player_name: id.into(),
            season,
            week,
            team: "HOM".into(),
            opponent: "OPP".into(),
            age: 22.0 + experience,
            experience,
            stats,
        }
    }

    fn def(team: &str, season: i32, week: u32, v: f64) -> DefenseStatLine {
        DefenseStatLine {
            team: team.into(),
            season,
            week,
            stats: DefenseStats([v, 10.0 * v, 5.0 * v, 1.0]),
        }
    }

    fn config() -> FeatureConfig {
        FeatureConfig::new(stats_with(-1.0), DefenseStats([-7.0, -7.0, -7.0, -7.0]))
    }

    fn corpus_for(games: Vec<StatLine>) -> GameLogCorpus {
        let defense = games
            .iter()
            .map(|g| def("OPP", g.season, g.week, f64::from(g.week)))
            .collect();
        GameLogCorpus::new(games, defense).unwrap()
    }

    #[test]
    fn feature_names_are_unique_and_sized() {
        let set: BTreeSet<_> = FEATURE_NAMES.iter().collect();
        assert_eq!(set.len(), FEATURE_COUNT);
        assert_eq!(FEATURE_COUNT, 34);
        assert_eq!(FEATURE_NAMES[prev_qb_index(StatCategory::TwoPtPass)], "prev_two_pt_pass");
        assert_eq!(FEATURE_NAMES[avg_qb_index(StatCategory::PassAttempts)], "avg_pass_attempts");
        assert_eq!(
            FEATURE_NAMES[opp_avg_index(DefenseCategory::TurnoversForced)],
            "opp_avg_turnovers_forced"
        );
        assert_eq!(
            FEATURE_NAMES[opp_prev_index(DefenseCategory::PointsAllowed)],
            "opp_prev_points_allowed"
        );
    }

    #[test]
    fn one_prior_game_fills_both_slots() {
        let games = vec![qb("a", 2010, 1, 3.0, stats_with(2.0)), qb("a", 2010, 2, 3.0, stats_with(5.0))];
        let corpus = corpus_for(games.clone());
        let built = build_feature_cases(&corpus, &games[1..], &ScoringRules::default(), &config()).unwrap();
        let f = &built.cases[0].features;
        assert_eq!(&f[PREV_QB_START..AVG_QB_START], stats_with(2.0).as_slice());
        assert_eq!(&f[AVG_QB_START..OPP_PREV_START], stats_with(2.0).as_slice());
        // opponent's previous game is week 1
        assert_eq!(&f[OPP_PREV_START..OPP_AVG_START], &[1.0, 10.0, 5.0, 1.0]);
    }

    #[test]
    fn twelve_prior_games_average_last_ten() {
        let games: Vec<_> = (1..=13u32)
            .map(|w| qb("a", 2010, w, 3.0, stats_with(f64::from(w * w))))
            .collect();
        let corpus = corpus_for(games.clone());
        let built =
            build_feature_cases(&corpus, &games[12..], &ScoringRules::default(), &config()).unwrap();
        let f = &built.cases[0].features;
        for c in StatCategory::ALL {
            let mut sum = 0.0;
            for g in &games[2..12] {
                sum += g.stats[c];
            }
            assert!((f[avg_qb_index(c)] - sum / 10.0).abs() < 1e-9, "{c}");
            assert_eq!(f[prev_qb_index(c)], games[11].stats[c]);
        }
        let opp_mean = (3..=12).map(f64::from).sum::<f64>() / 10.0;
        assert!((f[opp_avg_index(DefenseCategory::PointsAllowed)] - opp_mean).abs() < 1e-12);
    }

    #[test]
    fn first_career_game_uses_rookie_baseline() {
        let games = vec![qb("r", 2011, 1, 0.0, stats_with(4.0))];
        let corpus = GameLogCorpus::new(games.clone(), vec![def("OPP", 2011, 1, 3.0)]).unwrap();
        let cfg = config();
        let built = build_feature_cases(&corpus, &games, &ScoringRules::default(), &cfg).unwrap();
        let f = &built.cases[0].features;
        assert_eq!(&f[PREV_QB_START..AVG_QB_START], cfg.rookie_baseline.as_slice());
        assert_eq!(&f[AVG_QB_START..OPP_PREV_START], cfg.rookie_baseline.as_slice());
        // opponent has no earlier game either
        assert_eq!(&f[OPP_PREV_START..], &[-7.0; 8]);
    }

    #[test]
    fn label_is_own_game_score() {
        let games = vec![qb("a", 2010, 1, 3.0, stats_with(2.0)), qb("a", 2010, 2, 3.0, stats_with(5.0))];
        let corpus = corpus_for(games.clone());
        let rules = ScoringRules::default();
        let built = build_feature_cases(&corpus, &games, &rules, &config()).unwrap();
        assert_eq!(built.cases[1].label, rules.score(&games[1].stats).unwrap());
    }

    #[test]
    fn incomplete_cases_are_dropped_and_counted() {
        let games = vec![qb("a", 2010, 1, 3.0, stats_with(1.0)), qb("a", 2010, 2, 3.0, stats_with(1.0))];
        let corpus = GameLogCorpus::new(games.clone(), vec![def("OPP", 2010, 1, 1.0)]).unwrap();
        let built = build_feature_cases(&corpus, &games, &ScoringRules::default(), &config()).unwrap();
        assert_eq!(built.cases.len(), 1);
        assert_eq!(built.dropped_incomplete, 1);
    }

    #[test]
    fn case_outside_corpus_is_rejected() {
        let games = vec![qb("a", 2010, 1, 3.0, stats_with(1.0))];
        let corpus = corpus_for(games);
        let stranger = qb("z", 2010, 1, 3.0, stats_with(1.0));
        assert!(build_feature_cases(&corpus, &[stranger], &ScoringRules::default(), &config()).is_err());
    }

    #[test]
    fn ewma_mode_replaces_previous_game_slots() {
        let games: Vec<_> = (1..=4u32).map(|w| qb("a", 2010, w, 3.0, stats_with(f64::from(w)))).collect();
        let corpus = corpus_for(games.clone());
        let mut cfg = config();
        cfg.history_mode = HistoryMode::Ewma;
        cfg.ewma = Some(EwmaConfig::new(0.5, QbStats::zero()).unwrap());
        let built = build_feature_cases(&corpus, &games[3..], &ScoringRules::default(), &cfg).unwrap();
        let expected = ewma_smooth(games[..3].iter().map(|g| &g.stats), cfg.ewma.as_ref().unwrap());
        assert_eq!(&built.cases[0].features[PREV_QB_START..AVG_QB_START], expected.as_slice());

        cfg.ewma = None;
        assert!(build_feature_cases(&corpus, &games, &ScoringRules::default(), &cfg).is_err());
    }

    #[test]
    fn rookie_baseline_single_player_mean() {
        let mut a = QbStats::zero();
        a[StatCategory::PassYards] = 200.0;
        let mut b = QbStats::zero();
        b[StatCategory::PassYards] = 300.0;
        let corpus = GameLogCorpus::new(
            vec![qb("r", 2010, 1, 0.0, a), qb("r", 2010, 2, 0.0, b), qb("v", 2010, 1, 4.0, b)],
            vec![],
        )
        .unwrap();
        let baseline = rookie_baseline(&corpus, &BTreeSet::from([2010])).unwrap();
        assert_eq!(baseline[StatCategory::PassYards], 250.0);
    }

    #[test]
    fn rookie_baseline_is_mean_of_player_means() {
        let yards = |y: f64| {
            let mut s = QbStats::zero();
            s[StatCategory::PassYards] = y;
            s
        };
        // r1 averages 250 over two games, r2 averages 150 over one game.
        // Mean of means = 200; mean of games would be 216.67.
        let corpus = GameLogCorpus::new(
            vec![
                qb("r1", 2010, 1, 0.0, yards(200.0)),
                qb("r1", 2010, 2, 0.0, yards(300.0)),
                qb("r2", 2010, 1, 0.0, yards(150.0)),
            ],
            vec![],
        )
        .unwrap();
        let baseline = rookie_baseline(&corpus, &BTreeSet::from([2010])).unwrap();
        assert!((baseline[StatCategory::PassYards] - 200.0).abs() < 1e-12);
    }

    #[test]
    fn rookie_baseline_without_rookies_errors() {
        let corpus = GameLogCorpus::new(vec![qb("v", 2010, 1, 4.0, stats_with(1.0))], vec![]).unwrap();
        assert_eq!(rookie_baseline(&corpus, &BTreeSet::from([2010])), Err(Error::NoRookies));
        // rookies outside the requested seasons don't count
        let corpus = GameLogCorpus::new(vec![qb("r", 2014, 1, 0.0, stats_with(1.0))], vec![]).unwrap();
        assert!(rookie_baseline(&corpus, &BTreeSet::from([2010])).is_err());
    }

    #[test]
    fn ewma_alpha_one_returns_last_game() {
        let hist = [stats_with(1.0), stats_with(3.0)];
        let cfg = EwmaConfig::new(1.0, stats_with(9.0)).unwrap();
        assert_eq!(ewma_smooth(&hist, &cfg), stats_with(3.0));
    }

    #[test]
    fn ewma_alpha_zero_returns_initial() {
        let hist = [stats_with(1.0), stats_with(3.0)];
        let cfg = EwmaConfig::new(0.0, stats_with(9.0)).unwrap();
        assert_eq!(ewma_smooth(&hist, &cfg), stats_with(9.0));
    }

    #[test]
    fn ewma_hand_unrolled() {
        let yards = |y: f64| {
            let mut s = QbStats::zero();
            s[StatCategory::PassYards] = y;
            s
        };
        let cfg = EwmaConfig::new(0.5, QbStats::zero()).unwrap();
        let out = ewma_smooth(&[yards(10.0), yards(20.0)], &cfg);
        assert!((out[StatCategory::PassYards] - 12.5).abs() < 1e-12);
    }

    #[test]
    fn ewma_rejects_alpha_outside_unit_interval() {
        assert!(EwmaConfig::new(1.5, QbStats::zero()).is_err());
        assert!(EwmaConfig::new(-0.1, QbStats::zero()).is_err());
    }

    fn case(season: i32) -> FeatureCase {
        FeatureCase {
            player_id: "p".into(),
            season,
            week: 1,
            features: vec![0.0; FEATURE_COUNT],
            label: 0.0,
        }
    }

    #[test]
    fn split_assigns_by_season_and_drops_history_year() {
        let cases: Vec<_> = (2009..=2014).map(case).collect();
        let train = BTreeSet::from([2010, 2011, 2012, 2013]);
        let split = split_by_season(&cases, &train, 2014).unwrap();
        assert_eq!(split.train.len(), 4);
        assert!(split.train.iter().all(|c| train.contains(&c.season)));
        assert_eq!(split.test.len(), 1);
        assert_eq!(split.test[0].season, 2014);
        assert_eq!(split.dropped, 1);
        assert!(split.train_seasons.is_disjoint(&split.test_seasons));
    }

    #[test]
    fn split_errors() {
        let cases: Vec<_> = (2010..=2011).map(case).collect();
        assert!(split_by_season(&cases, &BTreeSet::from([2010]), 2010).is_err());
        assert_eq!(
            split_by_season(&cases, &BTreeSet::from([2012]), 2011).unwrap_err(),
            Error::EmptyPartition("train")
        );
        assert_eq!(
            split_by_season(&cases, &BTreeSet::from([2010]), 2013).unwrap_err().to_string(),
            "test partition is empty"
        );
    }

    proptest! {
        #[test]
        fn ewma_of_constant_history_is_constant(alpha in 0.0f64..=1.0, c in -100.0f64..100.0, n in 0usize..20) {
            let constant = QbStats([c; QB_CATEGORIES]);
            let hist = vec![constant; n];
            let out = ewma_smooth(&hist, &EwmaConfig::new(alpha, constant).unwrap());
            for v in out.0 {
                prop_assert!((v - c).abs() <= 1e-9 * (1.0 + c.abs()));
            }
        }

        #[test]
        fn window_beyond_career_equals_career_mean(n_games in 2u32..18, extra in 0usize..10) {
            let games: Vec<_> = (1..=n_games)
                .map(|w| qb("a", 2010, w, 3.0, stats_with(f64::from(w) * 1.5)))
                .collect();
            let corpus = corpus_for(games.clone());
            let mut cfg = config();
            cfg.window = n_games as usize + extra;
            let cases = filter_qb_cases(&corpus, 0);
            let built = build_feature_cases(&corpus, &cases, &ScoringRules::default(), &cfg).unwrap();
            let last = built.cases.iter().find(|c| c.week == n_games).unwrap();
            let career = QbStats::mean(games[..games.len() - 1].iter().map(|g| &g.stats)).unwrap();
            for (a, b) in last.features[AVG_QB_START..OPP_PREV_START].iter().zip(career.0) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn error_text_mentions_field() {
        let mut cfg = config();
        cfg.window = 0;
        let err = build_feature_cases(&corpus_for(vec![]), &[], &ScoringRules::default(), &cfg)
            .unwrap_err();
        assert!(err.to_string().contains("window"));
    }

    #[test]
    fn default_split_skips_earliest_of_three_or_more() {
        let (train, test) = default_season_split(&BTreeSet::from([2009, 2010, 2011, 2012, 2013, 2014])).unwrap();
        assert_eq!(train, BTreeSet::from([2010, 2011, 2012, 2013]));
        assert_eq!(test, 2014);
        let (train, test) = default_season_split(&BTreeSet::from([2010, 2011])).unwrap();
        assert_eq!((train, test), (BTreeSet::from([2010]), 2011));
        assert!(default_season_split(&BTreeSet::from([2010])).is_err());
    }
}
