//! Durable session storage and the reports derived from it.
//!
//! The event log is the only stored state: `<data>/<session_id>.events.jsonl`.
//! Leaderboards, velocity and score reports are recomputed on demand.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::serde_rational;
use crate::session::{
    decode_jsonl, replay, ScoreBreakdown, Session, SessionError, SessionEvent, StoryState,
};
use crate::Rational;

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("unknown report format {0:?} (expected json or csv)")]
    UnknownFormat(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} already exists")]
    SessionExists(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityPoint {
    pub sprint: u32,
    #[serde(with = "serde_rational")]
    pub completed_points: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub display_name: String,
    pub cumulative_points: i64,
    pub stories_scored: u32,
}

/// Sum of committed final estimates over scored stories, per sprint.
pub fn velocity_series(session: &Session) -> Vec<VelocityPoint> {
    let mut by_sprint: BTreeMap<u32, Rational> = BTreeMap::new();
    for story in session.stories().iter().filter(|s| s.state == StoryState::Scored) {
        let points = story.final_estimate.as_ref().map(|f| *f.get()).unwrap_or_default();
        *by_sprint.entry(story.sprint).or_default() += points;
    }
    by_sprint
        .into_iter()
        .map(|(sprint, completed_points)| VelocityPoint { sprint, completed_points })
        .collect()
}

/// Every participant, by points descending then name ascending.
pub fn leaderboard(session: &Session) -> Vec<LeaderboardEntry> {
    let mut entries: Vec<LeaderboardEntry> = session
        .participants()
        .iter()
        .map(|p| LeaderboardEntry {
            display_name: p.display_name.clone(),
            cumulative_points: p.cumulative_points,
            stories_scored: session
                .scores()
                .iter()
                .filter(|s| s.breakdowns.iter().any(|b| b.participant_id == p.participant_id))
                .count() as u32,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.cumulative_points
            .cmp(&a.cumulative_points)
            .then_with(|| a.display_name.cmp(&b.display_name))
    });
    entries
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(LedgerError::UnknownFormat(other.to_string())),
        }
    }
}

/// One CSV row / one JSON breakdown entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub story_id: String,
    pub participant: String,
    pub accuracy_points: i64,
    pub stag_points: i64,
    pub contribution_points: i64,
    pub adaptability_bonus: i64,
    pub total: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub leaderboard: Vec<LeaderboardEntry>,
    pub velocity: Vec<VelocityPoint>,
    pub scores: Vec<ScoreRow>,
}

fn score_rows(session: &Session) -> Vec<ScoreRow> {
    let name_of = |b: &ScoreBreakdown| {
        session
            .participant(&b.participant_id)
            .map(|p| p.display_name.clone())
            .unwrap_or_else(|_| b.participant_id.clone())
    };
    session
        .scores()
        .iter()
        .flat_map(|s| {
            s.breakdowns.iter().map(move |b| ScoreRow {
                story_id: s.story_id.clone(),
                participant: name_of(b),
                accuracy_points: b.accuracy_points,
                stag_points: b.stag_points,
                contribution_points: b.contribution_points,
                adaptability_bonus: b.adaptability_bonus,
                total: b.total,
            })
        })
        .collect()
}

pub fn build_report(session: &Session) -> SessionReport {
    SessionReport {
        session_id: session.session_id().to_string(),
        leaderboard: leaderboard(session),
        velocity: velocity_series(session),
        scores: score_rows(session),
    }
}

pub const CSV_HEADER: &str =
    "story_id,participant,accuracy_points,stag_points,contribution_points,adaptability_bonus,total";

/// Renders the report. JSON carries leaderboard, velocity and score rows;
/// CSV carries the score rows under a mandatory header.
pub fn export_report(session: &Session, format: ReportFormat) -> Result<String, LedgerError> {
    render_report(&build_report(session), format)
}

pub fn render_report(report: &SessionReport, format: ReportFormat) -> Result<String, LedgerError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report)?;
            out.push('\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_HEADER.split(','))?;
            for row in &report.scores {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
    }
}

pub fn parse_json_report(text: &str) -> Result<SessionReport, LedgerError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_csv_rows(text: &str) -> Result<Vec<ScoreRow>, LedgerError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<ScoreRow>, _>>()?)
}

/// File-backed event logs under one data directory.
#[derive(Debug, Clone)]
pub struct EventStore {
    root: PathBuf,
}

impl EventStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, LedgerError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log_path(&self, session_id: &str) -> PathBuf {
        self.root.join(format!("{session_id}.events.jsonl"))
    }

    pub fn report_path(&self, session_id: &str, format: ReportFormat) -> PathBuf {
        self.root.join(format!("report.{session_id}.{}", format.extension()))
    }

    pub fn exists(&self, session_id: &str) -> bool {
        self.log_path(session_id).is_file()
    }

    /// Writes a brand-new log; fails if one already exists.
    pub fn create(&self, session: &Session) -> Result<(), LedgerError> {
        let path = self.log_path(session.session_id());
        let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(LedgerError::SessionExists(session.session_id().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        write_events(&mut file, session.events())
    }

    /// Appends events (normally those produced by one command) and syncs.
    pub fn append(&self, session_id: &str, events: &[SessionEvent]) -> Result<(), LedgerError> {
        let path = self.log_path(session_id);
        if !path.is_file() {
            return Err(LedgerError::SessionNotFound(session_id.to_string()));
        }
        let mut file = OpenOptions::new().append(true).open(path)?;
        write_events(&mut file, events)
    }

    pub fn load_events(&self, session_id: &str) -> Result<Vec<SessionEvent>, LedgerError> {
        let path = self.log_path(session_id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(LedgerError::SessionNotFound(session_id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        Ok(decode_jsonl(&text)?)
    }

    pub fn load(&self, session_id: &str) -> Result<Session, LedgerError> {
        let session = replay(&self.load_events(session_id)?)?;
        if session.session_id() != session_id {
            return Err(SessionError::MalformedEvent(format!(
                "log for {session_id} describes session {}",
                session.session_id()
            ))
            .into());
        }
        Ok(session)
    }

    pub fn write_report(
        &self,
        session: &Session,
        format: ReportFormat,
    ) -> Result<PathBuf, LedgerError> {
        let path = self.report_path(session.session_id(), format);
        fs::write(&path, export_report(session, format)?)?;
        Ok(path)
    }
}

fn write_events(file: &mut File, events: &[SessionEvent]) -> Result<(), LedgerError> {
    let mut buf = String::new();
    for e in events {
        buf.push_str(&e.to_json_line());
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())?;
    file.sync_data()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::PayoffConfig;
    use crate::session::Timestamp;
    use crate::Scale;
    use chrono::TimeZone;

    fn t(sec: i64) -> Timestamp {
        chrono::Utc.timestamp_opt(1_760_000_000 + sec, 0).unwrap()
    }

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn session_with(names: &[&str]) -> (Session, Vec<String>) {
        let mut s = Session::create("s1", Scale::default(), PayoffConfig::default(), t(0)).unwrap();
        let ids = names.iter().map(|n| s.join(n, t(1)).unwrap()).collect();
        (s, ids)
    }

    /// Plays one story through scoring with every participant bidding.
    fn play(s: &mut Session, ids: &[String], bids: &[i64], actual: i64, start_sprint: bool) {
        let story = s.add_story("dev", "work", "value", t(2)).unwrap();
        s.open_estimation(&story, t(3)).unwrap();
        for (id, b) in ids.iter().zip(bids) {
            s.submit_estimate(&story, id, q(*b), t(4)).unwrap();
        }
        s.reveal(&story, true, t(5)).unwrap();
        s.commit_final(&story, t(6)).unwrap();
        if start_sprint {
            s.start_sprint(t(7)).unwrap();
        }
        s.record_actual_if_in_progress(&story, actual);
    }

    trait Finish {
        fn record_actual_if_in_progress(&mut self, story: &str, actual: i64);
    }

    impl Finish for Session {
        fn record_actual_if_in_progress(&mut self, story: &str, actual: i64) {
            if self.story(story).unwrap().state == StoryState::InProgress {
                self.record_actual(story, q(actual), t(8)).unwrap();
                self.score_story(story, t(9)).unwrap();
            }
        }
    }

    #[test]
    fn velocity_examples() {
        let (s, _) = session_with(&["a"]);
        assert!(velocity_series(&s).is_empty());

        // sprint 1: finals 8 and 5
        let (mut s, ids) = session_with(&["a"]);
        play(&mut s, &ids, &[8], 8, false);
        play(&mut s, &ids, &[5], 5, true);
        let stories: Vec<String> = s.stories().iter().map(|x| x.story_id.clone()).collect();
        s.record_actual_if_in_progress(&stories[0], 8);
        assert_eq!(velocity_series(&s), vec![VelocityPoint { sprint: 1, completed_points: q(13) }]);

        // sprint 1: {8}; sprint 2: {5, 3}
        let (mut s, ids) = session_with(&["a"]);
        play(&mut s, &ids, &[8], 8, true);
        play(&mut s, &ids, &[5], 5, false);
        play(&mut s, &ids, &[3], 3, true);
        let stories: Vec<String> = s.stories().iter().map(|x| x.story_id.clone()).collect();
        s.record_actual_if_in_progress(&stories[1], 5);
        assert_eq!(
            velocity_series(&s),
            vec![
                VelocityPoint { sprint: 1, completed_points: q(8) },
                VelocityPoint { sprint: 2, completed_points: q(8) },
            ]
        );
    }

    #[test]
    fn leaderboard_examples() {
        let (s, _) = session_with(&["zed", "amy"]);
        let names: Vec<_> = leaderboard(&s).into_iter().map(|e| (e.display_name, e.cumulative_points)).collect();
        assert_eq!(names, vec![("amy".to_string(), 0), ("zed".to_string(), 0)]);

        let (mut s, ids) = session_with(&["a", "b", "c"]);
        play(&mut s, &ids, &[8, 8, 8], 8, true);
        assert!(leaderboard(&s).iter().all(|e| e.cumulative_points == 11 && e.stories_scored == 1));

        let (mut s, ids) = session_with(&["a", "b", "c"]);
        play(&mut s, &ids, &[8, 8, 21], 8, true);
        let board: Vec<_> = leaderboard(&s).into_iter().map(|e| (e.display_name, e.cumulative_points)).collect();
        assert_eq!(board, vec![("a".into(), 8), ("b".into(), 8), ("c".into(), 4)]);
    }

    #[test]
    fn export_examples() {
        let (s, _) = session_with(&["a"]);
        assert_eq!(export_report(&s, ReportFormat::Csv).unwrap(), format!("{CSV_HEADER}\n"));
        assert!(matches!("xml".parse::<ReportFormat>(), Err(LedgerError::UnknownFormat(_))));
    }

    #[test]
    fn csv_rows_and_quoting() {
        let (mut s, ids) = session_with(&["O'Brien, Pat", "b"]);
        play(&mut s, &ids, &[8, 13], 8, true);
        let csv = export_report(&s, ReportFormat::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("s1,\"O'Brien, Pat\",5,2,1,0,8"));
        assert_eq!(lines.next(), Some("s1,b,0,3,1,0,4"));
        let rows = parse_csv_rows(&csv).unwrap();
        assert_eq!(rows, build_report(&s).scores);
    }

    #[test]
    fn json_export_is_a_fixed_point() {
        let (mut s, ids) = session_with(&["a", "b", "c"]);
        play(&mut s, &ids, &[8, 8, 21], 8, true);
        let text = export_report(&s, ReportFormat::Json).unwrap();
        let parsed = parse_json_report(&text).unwrap();
        assert_eq!(render_report(&parsed, ReportFormat::Json).unwrap(), text);
    }

    #[test]
    fn store_round_trip_reproduces_report() {
        let dir = tempfile::tempdir().unwrap();
        let store = EventStore::open(dir.path()).unwrap();
        let (mut s, ids) = session_with(&["a", "b"]);
        store.create(&s).unwrap();
        let before = s.version() as usize;
        play(&mut s, &ids, &[5, 8], 8, true);
        store.append("s1", &s.events()[before..]).unwrap();

        let loaded = store.load("s1").unwrap();
        assert_eq!(loaded.state_json(), s.state_json());
        assert_eq!(
            export_report(&loaded, ReportFormat::Json).unwrap(),
            export_report(&s, ReportFormat::Json).unwrap()
        );
        assert!(matches!(store.create(&s), Err(LedgerError::SessionExists(_))));
        assert!(matches!(store.load("nope"), Err(LedgerError::SessionNotFound(_))));
        let path = store.write_report(&loaded, ReportFormat::Csv).unwrap();
        assert!(path.ends_with("report.s1.csv"));
        assert!(store.log_path("s1").ends_with("s1.events.jsonl"));
    }
}
