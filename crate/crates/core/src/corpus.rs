//! In-memory game-log corpora and the quarterback case filter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{DefenseStatLine, StatCategory, StatLine};
use crate::error::{Error, Result};

/// Quarterback and team-defense game lines for one or more seasons.
///
/// Construction validates every record and rejects duplicate
/// `(player, season, week)` or `(team, season, week)` keys.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GameLogCorpus {
    qb_lines: Vec<StatLine>,
    defense_lines: Vec<DefenseStatLine>,
    seasons_present: BTreeSet<i32>,
}

impl GameLogCorpus {
    pub fn new(qb_lines: Vec<StatLine>, defense_lines: Vec<DefenseStatLine>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for line in &qb_lines {
            line.validate()?;
            if !seen.insert(line.key()) {
                return Err(Error::DuplicateKey(format!(
                    "qb ({}, {}, {})",
                    line.player_id, line.season, line.week
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for line in &defense_lines {
            line.validate()?;
            if !seen.insert(line.key()) {
                return Err(Error::DuplicateKey(format!(
                    "defense ({}, {}, {})",
                    line.team, line.season, line.week
                )));
            }
        }
        let seasons_present = qb_lines
            .iter()
            .map(|l| l.season)
            .chain(defense_lines.iter().map(|l| l.season))
            .collect();
        Ok(Self {
            qb_lines,
            defense_lines,
            seasons_present,
        })
    }

    pub fn qb_lines(&self) -> &[StatLine] {
        &self.qb_lines
    }

    pub fn defense_lines(&self) -> &[DefenseStatLine] {
        &self.defense_lines
    }

    pub fn seasons_present(&self) -> &BTreeSet<i32> {
        &self.seasons_present
    }

    pub fn is_empty(&self) -> bool {
        self.qb_lines.is_empty() && self.defense_lines.is_empty()
    }

    /// Whether the opposing defense has a line for the same game.
    pub fn has_opponent_line(&self, line: &StatLine) -> bool {
        self.defense_index().contains_key(&(line.opponent.as_str(), line.season, line.week))
    }

    /// Quarterback lines with no matching opposing-defense line.
    pub fn incomplete_cases(&self) -> Vec<&StatLine> {
        let index = self.defense_index();
        self.qb_lines
            .iter()
            .filter(|l| !index.contains_key(&(l.opponent.as_str(), l.season, l.week)))
            .collect()
    }

    pub(crate) fn defense_index(&self) -> BTreeMap<(&str, i32, u32), &DefenseStatLine> {
        self.defense_lines.iter().map(|l| (l.key(), l)).collect()
    }

    /// Lines restricted to the given seasons.
    pub fn restrict_to(&self, seasons: &BTreeSet<i32>) -> GameLogCorpus {
        let qb_lines: Vec<_> = self
            .qb_lines
            .iter()
            .filter(|l| seasons.contains(&l.season))
            .cloned()
            .collect();
        let defense_lines: Vec<_> = self
            .defense_lines
            .iter()
            .filter(|l| seasons.contains(&l.season))
            .cloned()
            .collect();
        let seasons_present = self.seasons_present.intersection(seasons).copied().collect();
        GameLogCorpus {
            qb_lines,
            defense_lines,
            seasons_present,
        }
    }

    /// Distinct player ids, sorted.
    pub fn player_ids(&self) -> BTreeSet<&str> {
        self.qb_lines.iter().map(|l| l.player_id.as_str()).collect()
    }
}

/// Which column the case filter thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterColumn {
    #[default]
    Attempts,
    Completions,
}

impl FilterColumn {
    pub fn category(self) -> StatCategory {
        match self {
            FilterColumn::Attempts => StatCategory::PassAttempts,
            FilterColumn::Completions => StatCategory::PassCompletions,
        }
    }
}

/// Quarterback lines eligible to become labeled cases: at least
/// `min_passes` pass attempts (or completions, per `column`).
pub fn filter_qb_cases_by(
    corpus: &GameLogCorpus,
    min_passes: u32,
    column: FilterColumn,
) -> Vec<StatLine> {
    let category = column.category();
    corpus
        .qb_lines
        .iter()
        .filter(|l| l.stats[category] >= f64::from(min_passes))
        .cloned()
        .collect()
}

pub fn filter_qb_cases(corpus: &GameLogCorpus, min_attempts: u32) -> Vec<StatLine> {
    filter_qb_cases_by(corpus, min_attempts, FilterColumn::Attempts)
}
