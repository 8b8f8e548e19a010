//! Game-statistic records and fantasy scoring.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of per-game quarterback stat categories.
pub const QB_CATEGORIES: usize = 12;
/// Number of per-game team-defense categories.
pub const DEFENSE_CATEGORIES: usize = 4;

/// The twelve per-game quarterback stat categories, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatCategory {
    PassAttempts,
    PassCompletions,
    PassYards,
    PassTds,
    Interceptions,
    RushAttempts,
    RushYards,
    RushTds,
    FumblesLost,
    FumblesTotal,
    TwoPtPass,
    TwoPtRush,
}

impl StatCategory {
    pub const ALL: [StatCategory; QB_CATEGORIES] = [
        StatCategory::PassAttempts,
        StatCategory::PassCompletions,
        StatCategory::PassYards,
        StatCategory::PassTds,
        StatCategory::Interceptions,
        StatCategory::RushAttempts,
        StatCategory::RushYards,
        StatCategory::RushTds,
        StatCategory::FumblesLost,
        StatCategory::FumblesTotal,
        StatCategory::TwoPtPass,
        StatCategory::TwoPtRush,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            StatCategory::PassAttempts => "pass_attempts",
            StatCategory::PassCompletions => "pass_completions",
            StatCategory::PassYards => "pass_yards",
            StatCategory::PassTds => "pass_tds",
            StatCategory::Interceptions => "interceptions",
            StatCategory::RushAttempts => "rush_attempts",
            StatCategory::RushYards => "rush_yards",
            StatCategory::RushTds => "rush_tds",
            StatCategory::FumblesLost => "fumbles_lost",
            StatCategory::FumblesTotal => "fumbles_total",
            StatCategory::TwoPtPass => "two_pt_pass",
            StatCategory::TwoPtRush => "two_pt_rush",
        }
    }

    /// Yardage may be negative; every other category is a count.
    pub const fn is_count(self) -> bool {
        !matches!(self, StatCategory::PassYards | StatCategory::RushYards)
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for StatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four per-game team-defense categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseCategory {
    PointsAllowed,
    PassYardsAllowed,
    RushYardsAllowed,
    TurnoversForced,
}

impl DefenseCategory {
    pub const ALL: [DefenseCategory; DEFENSE_CATEGORIES] = [
        DefenseCategory::PointsAllowed,
        DefenseCategory::PassYardsAllowed,
        DefenseCategory::RushYardsAllowed,
        DefenseCategory::TurnoversForced,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            DefenseCategory::PointsAllowed => "points_allowed",
            DefenseCategory::PassYardsAllowed => "pass_yards_allowed",
            DefenseCategory::RushYardsAllowed => "rush_yards_allowed",
            DefenseCategory::TurnoversForced => "turnovers_forced",
        }
    }
}

macro_rules! stat_vector {
    ($(#[$meta:meta])* $name:ident, $category:ty, $len:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name(pub [f64; $len]);

        impl $name {
            pub const fn zero() -> Self {
                Self([0.0; $len])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            /// Category-wise sum.
            pub fn add(&self, other: &Self) -> Self {
                let mut out = *self;
                out.0.iter_mut().zip(other.0).for_each(|(a, b)| *a += b);
                out
            }

            pub fn scale(&self, factor: f64) -> Self {
                let mut out = *self;
                out.0.iter_mut().for_each(|a| *a *= factor);
                out
            }

            /// Category-wise arithmetic mean; `None` for an empty input.
            pub fn mean<'a, I>(items: I) -> Option<Self>
            where
                I: IntoIterator<Item = &'a Self>,
            {
                let mut sum = Self::zero();
                let mut n = 0usize;
                for item in items {
                    sum = sum.add(item);
                    n += 1;
                }
                (n > 0).then(|| sum.scale(1.0 / n as f64))
            }
        }

        impl Index<$category> for $name {
            type Output = f64;
            fn index(&self, category: $category) -> &f64 {
                &self.0[category.index()]
            }
        }

        impl IndexMut<$category> for $name {
            fn index_mut(&mut self, category: $category) -> &mut f64 {
                &mut self.0[category.index()]
            }
        }
    };
}

stat_vector!(
    /// Values of the twelve quarterback categories, indexed by [`StatCategory`].
    QbStats,
    StatCategory,
    QB_CATEGORIES
);
stat_vector!(
    /// Values of the four defense categories, indexed by [`DefenseCategory`].
    DefenseStats,
    DefenseCategory,
    DEFENSE_CATEGORIES
);

/// One quarterback's line for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatLine {
    pub player_id: String,
    pub player_name: String,
    pub season: i32,
    pub week: u32,
    pub team: String,
    pub opponent: String,
    /// Age in years at game time.
    pub age: f64,
    /// Years as a professional; zero in a player's first season.
    pub experience: f64,
    pub stats: QbStats,
}

impl StatLine {
    pub fn key(&self) -> (&str, i32, u32) {
        (&self.player_id, self.season, self.week)
    }

    pub fn is_first_year(&self) -> bool {
        self.experience < 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord {
            key: format!("({}, {}, {})", self.player_id, self.season, self.week),
            reason,
        };
        if !(1..=22).contains(&self.week) {
            return Err(invalid(format!("week {} outside 1..=22", self.week)));
        }
        for category in StatCategory::ALL {
            let value = self.stats[category];
            if !value.is_finite() {
                return Err(invalid(format!("{category} is not finite")));
            }
            if category.is_count() && value < 0.0 {
                return Err(invalid(format!("{category} is negative ({value})")));
            }
        }
        if self.stats[StatCategory::PassCompletions] > self.stats[StatCategory::PassAttempts] {
            return Err(invalid(format!(
                "pass_completions ({}) exceed pass_attempts ({})",
                self.stats[StatCategory::PassCompletions],
                self.stats[StatCategory::PassAttempts]
            )));
        }
        if !self.age.is_finite() || !self.experience.is_finite() || self.experience < 0.0 {
            return Err(invalid("age and experience must be finite, experience >= 0".into()));
        }
        if self.age < self.experience {
            return Err(invalid(format!(
                "age ({}) below experience ({})",
                self.age, self.experience
            )));
        }
        Ok(())
    }
}

/// One team defense's line for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseStatLine {
    pub team: String,
    pub season: i32,
    pub week: u32,
    pub stats: DefenseStats,
}

impl DefenseStatLine {
    pub fn key(&self) -> (&str, i32, u32) {
        (&self.team, self.season, self.week)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord {
            key: format!("({}, {}, {})", self.team, self.season, self.week),
            reason,
        };
        if !(1..=22).contains(&self.week) {
            return Err(invalid(format!("week {} outside 1..=22", self.week)));
        }
        if self.stats.0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite value".into()));
        }
        for category in [DefenseCategory::PointsAllowed, DefenseCategory::TurnoversForced] {
            if self.stats[category] < 0.0 {
                return Err(invalid(format!("{} is negative", category.name())));
            }
        }
        Ok(())
    }
}

/// Points for one category: `value * points / per`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringRule {
    pub points: f64,
    #[serde(default = "one")]
    pub per: f64,
}

fn one() -> f64 {
    1.0
}

impl ScoringRule {
    pub const fn new(points: f64, per: f64) -> Self {
        Self { points, per }
    }

    pub fn apply(&self, value: f64) -> f64 {
        value * self.points / self.per
    }
}

/// A league's scoring system as data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<StatCategory, ScoringRule>", into = "BTreeMap<StatCategory, ScoringRule>")]
pub struct ScoringRules {
    rules: BTreeMap<StatCategory, ScoringRule>,
}

impl ScoringRules {
    pub fn new(rules: BTreeMap<StatCategory, ScoringRule>) -> Result<Self> {
        for (category, rule) in &rules {
            if !(rule.per > 0.0 && rule.per.is_finite()) {
                return Err(Error::config(
                    "scoring.per",
                    format!("{category}: divisor must be positive, got {}", rule.per),
                ));
            }
            if !rule.points.is_finite() {
                return Err(Error::config(
                    "scoring.points",
                    format!("{category}: points must be finite"),
                ));
            }
        }
        Ok(Self { rules })
    }

    /// The standard system: 1 pt per 25 passing yards, 4 per passing TD,
    /// -2 per interception, 1 per 10 rushing yards, 6 per rushing TD,
    /// 2 per two-point conversion, -2 per lost fumble, 0 elsewhere.
    pub fn nfl_standard() -> Self {
        use StatCategory::*;
        let rules = StatCategory::ALL
            .into_iter()
            .map(|category| {
                let rule = match category {
                    PassYards => ScoringRule::new(1.0, 25.0),
                    PassTds => ScoringRule::new(4.0, 1.0),
                    Interceptions => ScoringRule::new(-2.0, 1.0),
                    RushYards => ScoringRule::new(1.0, 10.0),
                    RushTds => ScoringRule::new(6.0, 1.0),
                    TwoPtPass | TwoPtRush => ScoringRule::new(2.0, 1.0),
                    FumblesLost => ScoringRule::new(-2.0, 1.0),
                    PassAttempts | PassCompletions | RushAttempts | FumblesTotal => {
                        ScoringRule::new(0.0, 1.0)
                    }
                };
                (category, rule)
            })
            .collect();
        Self { rules }
    }

    pub fn get(&self, category: StatCategory) -> Option<&ScoringRule> {
        self.rules.get(&category)
    }

    pub fn iter(&self) -> impl Iterator<Item = (StatCategory, &ScoringRule)> {
        self.rules.iter().map(|(c, r)| (*c, r))
    }

    /// Fantasy points for a set of stats, at full precision.
    pub fn score(&self, stats: &QbStats) -> Result<f64> {
        let mut total = 0.0;
        for category in StatCategory::ALL {
            let value = stats[category];
            match self.rules.get(&category) {
                Some(rule) => total += rule.apply(value),
                None if value != 0.0 => return Err(Error::MissingRule(category)),
                None => {}
            }
        }
        Ok(total)
    }
}

impl Default for ScoringRules {
    fn default() -> Self {
        Self::nfl_standard()
    }
}

impl TryFrom<BTreeMap<StatCategory, ScoringRule>> for ScoringRules {
    type Error = Error;
    fn try_from(rules: BTreeMap<StatCategory, ScoringRule>) -> Result<Self> {
        Self::new(rules)
    }
}

impl From<ScoringRules> for BTreeMap<StatCategory, ScoringRule> {
    fn from(rules: ScoringRules) -> Self {
        rules.rules
    }
}

pub fn score_stat_line(line: &StatLine, rules: &ScoringRules) -> Result<f64> {
    rules.score(&line.stats)
}

/// One game's fantasy points, keyed for season aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerPoints<'a> {
    pub player_id: &'a str,
    pub season: i32,
    pub points: f64,
}

/// The `n` players with the highest total points in `season`, best first.
/// Equal totals are ordered by ascending player id.
pub fn rank_top_players<'a, I>(entries: I, season: i32, n: usize) -> Result<Vec<String>>
where
    I: IntoIterator<Item = PlayerPoints<'a>>,
{
    if n == 0 {
        return Err(Error::config("top_n", "must be at least 1"));
    }
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for entry in entries.into_iter().filter(|e| e.season == season) {
        *totals.entry(entry.player_id).or_insert(0.0) += entry.points;
    }
    if totals.len() < n {
        return Err(Error::InsufficientPlayers {
            season,
            needed: n,
            available: totals.len(),
        });
    }
    let mut ranked: Vec<(&str, f64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(n).map(|(id, _)| String::from(id)).collect())
}
