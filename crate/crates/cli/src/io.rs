//! CSV game logs, featurized case files, prediction files and JSON helpers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use gridiron_core::corpus::GameLogCorpus;
use gridiron_core::domain::{DefenseStatLine, DefenseStats, QbStats, StatLine};
use gridiron_core::eval::HistogramBin;
use gridiron_core::features::FeatureCase;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}{}: {message}", column.as_ref().map(|c| format!(", column `{c}`")).unwrap_or_default())]
    Row {
        path: PathBuf,
        line: u64,
        column: Option<String>,
        message: String,
    },
    #[error("{path}: header mismatch: expected `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: gridiron_core::Error,
    },
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const QB_COLUMNS: [&str; 20] = [
    "player_id",
    "player_name",
    "season",
    "week",
    "team",
    "opponent",
    "age",
    "experience",
    "pass_attempts",
    "pass_completions",
    "pass_yards",
    "pass_tds",
    "interceptions",
    "rush_attempts",
    "rush_yards",
    "rush_tds",
    "fumbles_lost",
    "fumbles_total",
    "two_pt_pass",
    "two_pt_rush",
];

pub const DEFENSE_COLUMNS: [&str; 7] = [
    "team",
    "season",
    "week",
    "points_allowed",
    "pass_yards_allowed",
    "rush_yards_allowed",
    "turnovers_forced",
];

#[derive(Debug, Serialize, Deserialize)]
struct QbRow {
    player_id: String,
    player_name: String,
    season: i32,
    week: u32,
    team: String,
    opponent: String,
    age: f64,
    experience: f64,
    pass_attempts: f64,
    pass_completions: f64,
    pass_yards: f64,
    pass_tds: f64,
    interceptions: f64,
    rush_attempts: f64,
    rush_yards: f64,
    rush_tds: f64,
    fumbles_lost: f64,
    fumbles_total: f64,
    two_pt_pass: f64,
    two_pt_rush: f64,
}

impl From<QbRow> for StatLine {
    fn from(r: QbRow) -> Self {
        StatLine {
            player_id: r.player_id,
            player_name: r.player_name,
            season: r.season,
            week: r.week,
            team: r.team,
            opponent: r.opponent,
            age: r.age,
            experience: r.experience,
            stats: QbStats([
                r.pass_attempts,
                r.pass_completions,
                r.pass_yards,
                r.pass_tds,
                r.interceptions,
                r.rush_attempts,
                r.rush_yards,
                r.rush_tds,
                r.fumbles_lost,
                r.fumbles_total,
                r.two_pt_pass,
                r.two_pt_rush,
            ]),
        }
    }
}

impl From<&StatLine> for QbRow {
    fn from(l: &StatLine) -> Self {
        let s = l.stats.0;
        QbRow {
            player_id: l.player_id.clone(),
            player_name: l.player_name.clone(),
            season: l.season,
            week: l.week,
            team: l.team.clone(),
            opponent: l.opponent.clone(),
            age: l.age,
            experience: l.experience,
            pass_attempts: s[0],
            pass_completions: s[1],
            pass_yards: s[2],
            pass_tds: s[3],
            interceptions: s[4],
            rush_attempts: s[5],
            rush_yards: s[6],
            rush_tds: s[7],
            fumbles_lost: s[8],
            fumbles_total: s[9],
            two_pt_pass: s[10],
            two_pt_rush: s[11],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DefenseRow {
    team: String,
    season: i32,
    week: u32,
    points_allowed: f64,
    pass_yards_allowed: f64,
    rush_yards_allowed: f64,
    turnovers_forced: f64,
}

impl From<DefenseRow> for DefenseStatLine {
    fn from(r: DefenseRow) -> Self {
        DefenseStatLine {
            team: r.team,
            season: r.season,
            week: r.week,
            stats: DefenseStats([r.points_allowed, r.pass_yards_allowed, r.rush_yards_allowed, r.turnovers_forced]),
        }
    }
}

impl From<&DefenseStatLine> for DefenseRow {
    fn from(l: &DefenseStatLine) -> Self {
        let s = l.stats.0;
        DefenseRow {
            team: l.team.clone(),
            season: l.season,
            week: l.week,
            points_allowed: s[0],
            pass_yards_allowed: s[1],
            rush_yards_allowed: s[2],
            turnovers_forced: s[3],
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(io_err(path))
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    File::create(path).map_err(io_err(path))
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IoError::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn row_error(path: &Path, err: csv::Error, headers: &csv::StringRecord) -> IoError {
    let line = err.position().map_or(0, |p| p.line());
    let (column, message) = match err.kind() {
        csv::ErrorKind::Deserialize { err: de, .. } => (
            de.field().and_then(|f| headers.get(f as usize)).map(str::to_owned),
            de.kind().to_string(),
        ),
        _ => (None, err.to_string()),
    };
    IoError::Row {
        path: path.to_path_buf(),
        line,
        column,
        message,
    }
}

/// Rows of `path` deserialized as `R`, each paired with its 1-based line.
fn read_rows<R: DeserializeOwned>(path: &Path, reader: impl Read, expected: &[&str]) -> Result<Vec<(u64, R)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| row_error(path, e, &csv::StringRecord::new()))?.clone();
    check_header(path, &headers, expected)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                let row = record.deserialize(Some(&headers)).map_err(|e| {
                    let mut err = row_error(path, e, &headers);
                    if let IoError::Row { line: l, .. } = &mut err {
                        *l = line;
                    }
                    err
                })?;
                out.push((line, row));
            }
            Err(e) => return Err(row_error(path, e, &headers)),
        }
    }
    Ok(out)
}

fn record_error(path: &Path, line: u64, err: gridiron_core::Error) -> IoError {
    IoError::Row {
        path: path.to_path_buf(),
        line,
        column: None,
        message: err.to_string(),
    }
}

/// Reads a quarterback log, validating every row.
pub fn read_qb_lines(path: &Path) -> Result<Vec<StatLine>> {
    read_qb_lines_from(path, open(path)?)
}

pub fn read_qb_lines_from(path: &Path, reader: impl Read) -> Result<Vec<StatLine>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (line, row) in read_rows::<QbRow>(path, reader, &QB_COLUMNS)? {
        let stat: StatLine = row.into();
        stat.validate().map_err(|e| record_error(path, line, e))?;
        let key = (stat.player_id.clone(), stat.season, stat.week);
        if let Some(first) = seen.insert(key, line) {
            return Err(record_error(
                path,
                line,
                gridiron_core::Error::DuplicateKey(format!(
                    "({}, {}, {}) first seen on line {first}",
                    stat.player_id, stat.season, stat.week
                )),
            ));
        }
        out.push(stat);
    }
    Ok(out)
}

pub fn read_defense_lines(path: &Path) -> Result<Vec<DefenseStatLine>> {
    read_defense_lines_from(path, open(path)?)
}

pub fn read_defense_lines_from(path: &Path, reader: impl Read) -> Result<Vec<DefenseStatLine>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (line, row) in read_rows::<DefenseRow>(path, reader, &DEFENSE_COLUMNS)? {
        let stat: DefenseStatLine = row.into();
        stat.validate().map_err(|e| record_error(path, line, e))?;
        let key = (stat.team.clone(), stat.season, stat.week);
        if let Some(first) = seen.insert(key, line) {
            return Err(record_error(
                path,
                line,
                gridiron_core::Error::DuplicateKey(format!(
                    "({}, {}, {}) first seen on line {first}",
                    stat.team, stat.season, stat.week
                )),
            ));
        }
        out.push(stat);
    }
    Ok(out)
}

/// Reads both logs into a corpus. The defense log is optional so a
/// quarterback file can be inspected on its own.
pub fn parse_game_log(qb_path: &Path, defense_path: Option<&Path>) -> Result<GameLogCorpus> {
    let qb = read_qb_lines(qb_path)?;
    let defense = match defense_path {
        Some(p) => read_defense_lines(p)?,
        None => Vec::new(),
    };
    GameLogCorpus::new(qb, defense).map_err(|source| IoError::Core {
        path: qb_path.to_path_buf(),
        source,
    })
}

fn write_rows<R: Serialize>(path: &Path, writer: impl Write, rows: impl Iterator<Item = R>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let wrap = |e: csv::Error| IoError::Row {
        path: path.to_path_buf(),
        line: 0,
        column: None,
        message: e.to_string(),
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_qb_lines(path: &Path, lines: &[StatLine]) -> Result<()> {
    write_rows(path, create(path)?, lines.iter().map(QbRow::from), &QB_COLUMNS)
}

pub fn write_qb_lines_to(writer: impl Write, lines: &[StatLine]) -> Result<()> {
    write_rows(Path::new("<memory>"), writer, lines.iter().map(QbRow::from), &QB_COLUMNS)
}

pub fn write_defense_lines(path: &Path, lines: &[DefenseStatLine]) -> Result<()> {
    write_rows(path, create(path)?, lines.iter().map(DefenseRow::from), &DEFENSE_COLUMNS)
}

pub fn write_defense_lines_to(writer: impl Write, lines: &[DefenseStatLine]) -> Result<()> {
    write_rows(Path::new("<memory>"), writer, lines.iter().map(DefenseRow::from), &DEFENSE_COLUMNS)
}

const CASE_ID_COLUMNS: [&str; 3] = ["player_id", "season", "week"];

/// Featurized cases: `player_id,season,week,<feature names…>,label`.
pub fn write_feature_cases(path: &Path, names: &[&str], cases: &[FeatureCase]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let wrap = |e: csv::Error| IoError::Row {
        path: path.to_path_buf(),
        line: 0,
        column: None,
        message: e.to_string(),
    };
    let header: Vec<&str> = CASE_ID_COLUMNS.iter().copied().chain(names.iter().copied()).chain(["label"]).collect();
    w.write_record(&header).map_err(wrap)?;
    for c in cases {
        if c.dims() != names.len() {
            return Err(IoError::Row {
                path: path.to_path_buf(),
                line: 0,
                column: None,
                message: format!("case has {} features, header names {}", c.dims(), names.len()),
            });
        }
        let mut record = vec![c.player_id.clone(), c.season.to_string(), c.week.to_string()];
        record.extend(c.features.iter().map(|v| v.to_string()));
        record.push(c.label.to_string());
        w.write_record(&record).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFile {
    pub feature_names: Vec<String>,
    pub cases: Vec<FeatureCase>,
}

pub fn read_feature_cases(path: &Path) -> Result<CaseFile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| row_error(path, e, &csv::StringRecord::new()))?.clone();
    let n = headers.len();
    let ok = n >= 5 && headers.iter().take(3).eq(CASE_ID_COLUMNS.iter().copied()) && &headers[n - 1] == "label";
    if !ok {
        return Err(IoError::Header {
            path: path.to_path_buf(),
            expected: "player_id,season,week,<features…>,label".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let feature_names: Vec<String> = headers.iter().skip(3).take(n - 4).map(str::to_owned).collect();
    let mut cases = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| row_error(path, e, &headers))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |column: usize, message: String| IoError::Row {
            path: path.to_path_buf(),
            line,
            column: Some(headers[column].to_owned()),
            message,
        };
        let num = |column: usize| -> Result<f64> {
            record[column].parse::<f64>().map_err(|e| bad(column, e.to_string()))
        };
        let case = FeatureCase {
            player_id: record[0].to_owned(),
            season: record[1].parse().map_err(|e: std::num::ParseIntError| bad(1, e.to_string()))?,
            week: record[2].parse().map_err(|e: std::num::ParseIntError| bad(2, e.to_string()))?,
            features: (3..n - 1).map(num).collect::<Result<_>>()?,
            label: num(n - 1)?,
        };
        cases.push(case);
    }
    Ok(CaseFile { feature_names, cases })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub player_id: String,
    pub season: i32,
    pub week: u32,
    pub prediction: f64,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_rows(path, create(path)?, rows.iter(), &["player_id", "season", "week", "prediction"])
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    Ok(read_rows(path, open(path)?, &["player_id", "season", "week", "prediction"])?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    write_rows(path, create(path)?, bins.iter(), &["bin_lower", "count"])
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create(path)?.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "player_id,player_name,season,week,team,opponent,age,experience,pass_attempts,pass_completions,pass_yards,pass_tds,interceptions,rush_attempts,rush_yards,rush_tds,fumbles_lost,fumbles_total,two_pt_pass,two_pt_rush\n";

    fn parse(text: &str) -> Result<Vec<StatLine>> {
        read_qb_lines_from(Path::new("qb.csv"), text.as_bytes())
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse(HEADER).unwrap().is_empty());
    }

    #[test]
    fn bad_number_names_line_and_column() {
        let text = format!("{HEADER}a,A,2010,1,T1,T2,25,3,30,20,250,2,1,3,10,0,0,0,0,0\nb,B,2010,1,T1,T2,25,3,30,x,250,2,1,3,10,0,0,0,0,0\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("pass_completions"), "{err}");
    }

    #[test]
    fn completions_over_attempts_names_row() {
        let text = format!("{HEADER}a,A,2010,1,T1,T2,25,3,10,12,250,2,1,3,10,0,0,0,0,0\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_names_key() {
        let row = "a,A,2010,1,T1,T2,25,3,30,20,250,2,1,3,10,0,0,0,0,0\n";
        let err = parse(&format!("{HEADER}{row}{row}")).unwrap_err().to_string();
        assert!(err.contains("(a, 2010, 1)"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(parse("player,season\n"), Err(IoError::Header { .. })));
    }

    #[test]
    fn round_trip_in_memory() {
        let text = format!("{HEADER}a,Some Name,2010,3,T1,T2,25.5,3,30,20,251.25,2,1,3,-4,0,1,1,0,1\n");
        let lines = parse(&text).unwrap();
        let mut buf = Vec::new();
        write_qb_lines_to(&mut buf, &lines).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), lines);
    }
}
