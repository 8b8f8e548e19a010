//! Seeded synthetic corpora whose fantasy scores are a known linear function
//! of a few features.
//!
//! Generation runs in two passes. The first draws the schedule, every
//! defense line and every quarterback stat except passing yards. The second
//! computes the active features of each game from that history and solves
//! for the passing yards that make the game's standard-rules score equal
//! `bias + w·x + u`, with `u` uniform on `[-noise, noise]`. None of the
//! active features depends on passing yards, so the second pass never
//! invalidates its own inputs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GameLogCorpus;
use crate::domain::{
    DefenseCategory, DefenseStatLine, DefenseStats, QbStats, ScoringRules, StatCategory, StatLine,
};
use crate::error::{Error, Result};
use crate::features::{
    default_season_split, league_average_defense, opp_avg_index, opp_prev_index,
    AGE, EXPERIENCE, FEATURE_COUNT,
};
use crate::math;

pub const FIRST_SEASON: i32 = 2009;
pub const WEEKS_PER_SEASON: u32 = 16;
/// Rolling window the ground truth assumes.
pub const TRUTH_WINDOW: usize = 10;

const MISS_PROBABILITY: f64 = 0.08;
const CAMEO_PROBABILITY: f64 = 0.05;
const BIAS: f64 = -12.0;

/// The planted label function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// One weight per feature slot; zero outside `active`.
    pub weights: Vec<f64>,
    pub active: Vec<usize>,
    pub bias: f64,
    pub noise: f64,
    pub window: usize,
    /// Seasons the rookie and defense baselines were fitted on.
    pub train_seasons: BTreeSet<i32>,
    pub test_season: i32,
}

impl GroundTruth {
    /// `bias + w·x`, the noiseless label.
    pub fn label(&self, features: &[f64]) -> f64 {
        self.bias + math::dot(&self.weights, features)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: GameLogCorpus,
    pub truth: GroundTruth,
}

fn planted_weights() -> Vec<(usize, f64)> {
    vec![
        (AGE, 0.25),
        (EXPERIENCE, 0.25),
        (opp_prev_index(DefenseCategory::PointsAllowed), 0.15),
        (opp_prev_index(DefenseCategory::RushYardsAllowed), 0.03),
        (opp_avg_index(DefenseCategory::PassYardsAllowed), 0.03),
        (opp_prev_index(DefenseCategory::PassYardsAllowed), 0.02),
    ]
}

struct Player {
    id: String,
    team: usize,
    debut: i32,
    experience_at_debut: f64,
    age_at_debut: f64,
    quality: f64,
}

fn draw_player(rng: &mut ChaCha8Rng, i: usize, seasons: &[i32], first_train: i32) -> Player {
    let last = seasons[seasons.len() - 1];
    // 0: rookie in the first training season, 1: veteran from the start,
    // 2: rookie in the first season, 3: rookie in a later season
    let (debut, experience_at_debut) = match i % 4 {
        0 => (first_train, 0.0),
        1 => (seasons[0], f64::from(rng.random_range(1..=12u32))),
        2 => (seasons[0], 0.0),
        _ => (rng.random_range(seasons[0] + 1..=last), 0.0),
    };
    let age_at_debut = 21.0 + experience_at_debut + rng.random::<f64>() * 4.0;
    Player {
        id: format!("QB{i:03}"),
        team: i,
        debut,
        experience_at_debut,
        age_at_debut,
        quality: 0.7 + 0.6 * rng.random::<f64>(),
    }
}

fn draw_stats(rng: &mut ChaCha8Rng, quality: f64) -> QbStats {
    let mut s = QbStats::zero();
    let attempts = if rng.random::<f64>() < CAMEO_PROBABILITY {
        f64::from(rng.random_range(1..=4u32))
    } else {
        libm::round(quality * 32.0 + rng.random_range(-8.0..8.0)).max(5.0)
    };
    s[StatCategory::PassAttempts] = attempts;
    s[StatCategory::PassCompletions] = libm::round(attempts * rng.random_range(0.5..0.72));
    s[StatCategory::PassTds] = f64::from(rng.random_range(0..=(1 + (attempts / 10.0) as u32)));
    s[StatCategory::Interceptions] = f64::from(rng.random_range(0..=2u32));
    let rushes = rng.random_range(0..=7u32);
    s[StatCategory::RushAttempts] = f64::from(rushes);
    s[StatCategory::RushYards] = libm::round(f64::from(rushes) * rng.random_range(-1.0..7.0));
    s[StatCategory::RushTds] = f64::from(u8::from(rushes > 0 && rng.random::<f64>() < 0.1));
    let fumbles = f64::from(rng.random_range(0..=2u32));
    s[StatCategory::FumblesTotal] = fumbles;
    s[StatCategory::FumblesLost] = libm::floor(fumbles * rng.random::<f64>() * 1.5).min(fumbles);
    s[StatCategory::TwoPtPass] = f64::from(u8::from(rng.random::<f64>() < 0.05));
    s[StatCategory::TwoPtRush] = f64::from(u8::from(rng.random::<f64>() < 0.02));
    s
}

fn draw_defense(rng: &mut ChaCha8Rng) -> DefenseStats {
    DefenseStats([
        f64::from(rng.random_range(3..=42u32)),
        libm::round(rng.random_range(140.0..360.0)),
        libm::round(rng.random_range(40.0..190.0)),
        f64::from(rng.random_range(0..=4u32)),
    ])
}

/// Mean of the last `window` values, or `fallback` when there are none.
fn window_mean(values: &[f64], window: usize, fallback: f64) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    if tail.is_empty() {
        fallback
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

pub fn generate_synthetic(
    seed: u64,
    n_players: usize,
    n_seasons: usize,
    noise: f64,
) -> Result<SyntheticCorpus> {
    if n_players == 0 {
        return Err(Error::config("n_players", "must be at least 1"));
    }
    if n_seasons < 2 {
        return Err(Error::config("n_seasons", "must be at least 2"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::config("noise", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seasons: Vec<i32> = (0..n_seasons as i32).map(|k| FIRST_SEASON + k).collect();
    let season_set: BTreeSet<i32> = seasons.iter().copied().collect();
    let (train_seasons, test_season) = default_season_split(&season_set)?;
    let first_train = *train_seasons.first().expect("split leaves a training season");

    let n_teams = (n_players + n_players % 2).max(2);
    let teams: Vec<String> = (0..n_teams).map(|t| format!("T{t:02}")).collect();

    // Schedule and defenses: every team plays every week.
    let mut opponent_of: BTreeMap<(i32, u32), Vec<usize>> = BTreeMap::new();
    let mut defense_lines = Vec::with_capacity(n_teams * seasons.len() * WEEKS_PER_SEASON as usize);
    let mut order: Vec<usize> = (0..n_teams).collect();
    for &season in &seasons {
        for week in 1..=WEEKS_PER_SEASON {
            order.shuffle(&mut rng);
            let mut opp = vec![0; n_teams];
            for pair in order.chunks(2) {
                opp[pair[0]] = pair[1];
                opp[pair[1]] = pair[0];
            }
            opponent_of.insert((season, week), opp);
            for team in &teams {
                defense_lines.push(DefenseStatLine {
                    team: team.clone(),
                    season,
                    week,
                    stats: draw_defense(&mut rng),
                });
            }
        }
    }

    let players: Vec<Player> = (0..n_players)
        .map(|i| draw_player(&mut rng, i, &seasons, first_train))
        .collect();
    let mut qb_lines = Vec::new();
    for p in &players {
        for &season in seasons.iter().filter(|&&s| s >= p.debut) {
            let years_in = f64::from(season - p.debut);
            for week in 1..=WEEKS_PER_SEASON {
                if rng.random::<f64>() < MISS_PROBABILITY {
                    continue;
                }
                let opponent = opponent_of[&(season, week)][p.team];
                qb_lines.push(StatLine {
                    player_id: p.id.clone(),
                    player_name: format!("Player {}", &p.id[2..]),
                    season,
                    week,
                    team: teams[p.team].clone(),
                    opponent: teams[opponent].clone(),
                    age: p.age_at_debut + years_in + f64::from(week - 1) / 17.0,
                    experience: p.experience_at_debut + years_in,
                    stats: draw_stats(&mut rng, p.quality),
                });
            }
        }
    }

    // Second pass: plant the label.
    let provisional = GameLogCorpus::new(qb_lines.clone(), defense_lines.clone())?;
    let league = league_average_defense(&provisional, &train_seasons)?;

    let mut defense_by_team: BTreeMap<&str, Vec<&DefenseStatLine>> = BTreeMap::new();
    for line in &defense_lines {
        defense_by_team.entry(line.team.as_str()).or_default().push(line);
    }
    defense_by_team.values_mut().for_each(|v| v.sort_by_key(|l| (l.season, l.week)));

    let mut weights = vec![0.0; FEATURE_COUNT];
    for (index, w) in planted_weights() {
        weights[index] = w;
    }
    let truth = GroundTruth {
        weights,
        active: planted_weights().into_iter().map(|(i, _)| i).collect(),
        bias: BIAS,
        noise,
        window: TRUTH_WINDOW,
        train_seasons,
        test_season,
    };

    let rules = ScoringRules::nfl_standard();
    let yards_rule = *rules
        .get(StatCategory::PassYards)
        .ok_or(Error::MissingRule(StatCategory::PassYards))?;
    for line in qb_lines.iter_mut() {
        let at = (line.season, line.week);
        let opp_games = &defense_by_team[line.opponent.as_str()];
        let opp_prior = &opp_games[..opp_games.partition_point(|l| (l.season, l.week) < at)];
        let column = |c: DefenseCategory| -> Vec<f64> { opp_prior.iter().map(|l| l.stats[c]).collect() };
        let opp_prev = |c: DefenseCategory| opp_prior.last().map_or(league[c], |l| l.stats[c]);

        let mut x = vec![0.0; FEATURE_COUNT];
        x[AGE] = line.age;
        x[EXPERIENCE] = line.experience;
        x[opp_prev_index(DefenseCategory::PassYardsAllowed)] = opp_prev(DefenseCategory::PassYardsAllowed);
        x[opp_prev_index(DefenseCategory::PointsAllowed)] = opp_prev(DefenseCategory::PointsAllowed);
        x[opp_prev_index(DefenseCategory::RushYardsAllowed)] = opp_prev(DefenseCategory::RushYardsAllowed);
        x[opp_avg_index(DefenseCategory::PassYardsAllowed)] = window_mean(
            &column(DefenseCategory::PassYardsAllowed),
            TRUTH_WINDOW,
            league[DefenseCategory::PassYardsAllowed],
        );

        let u = if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
        let target = truth.label(&x) + u;
        line.stats[StatCategory::PassYards] = 0.0;
        let rest = rules.score(&line.stats)?;
        line.stats[StatCategory::PassYards] = (target - rest) * yards_rule.per / yards_rule.points;
    }

    Ok(SyntheticCorpus {
        corpus: GameLogCorpus::new(qb_lines, defense_lines)?,
        truth,
    })
}
