//! Session event log entries and their JSON Lines encoding.
//!
//! One event per line: `{"seq":1,"kind":"SessionCreated","at":"…Z","payload":{…}}`.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SessionError;
use crate::games::PayoffConfig;
use crate::scalar::serde_rational;
use crate::{Effort, Points, Rational, Scale};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub scale: Scale,
    pub cfg: PayoffConfig,
    #[serde(with = "serde_rational", default = "super::default_spread_threshold")]
    pub spread_threshold: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantJoined {
    pub participant_id: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryAdded {
    pub story_id: String,
    pub role: String,
    pub function: String,
    pub benefit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryRef {
    pub story_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSubmitted {
    pub story_id: String,
    pub participant_id: String,
    pub value: Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarificationRaised {
    pub story_id: String,
    pub participant_id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revealed {
    pub story_id: String,
    pub quorum_override: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Committed {
    pub story_id: String,
    pub final_estimate: Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintStarted {
    pub sprint: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRevised {
    pub story_id: String,
    pub participant_id: String,
    pub value: Points,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualRecorded {
    pub story_id: String,
    pub actual: Effort,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventBody {
    SessionCreated(SessionCreated),
    ParticipantJoined(ParticipantJoined),
    StoryAdded(StoryAdded),
    EstimationOpened(StoryRef),
    EstimateSubmitted(EstimateSubmitted),
    ClarificationRaised(ClarificationRaised),
    Revealed(Revealed),
    Committed(Committed),
    SprintStarted(SprintStarted),
    EstimateRevised(EstimateRevised),
    ActualRecorded(ActualRecorded),
    Scored(StoryRef),
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionCreated(_) => "SessionCreated",
            EventBody::ParticipantJoined(_) => "ParticipantJoined",
            EventBody::StoryAdded(_) => "StoryAdded",
            EventBody::EstimationOpened(_) => "EstimationOpened",
            EventBody::EstimateSubmitted(_) => "EstimateSubmitted",
            EventBody::ClarificationRaised(_) => "ClarificationRaised",
            EventBody::Revealed(_) => "Revealed",
            EventBody::Committed(_) => "Committed",
            EventBody::SprintStarted(_) => "SprintStarted",
            EventBody::EstimateRevised(_) => "EstimateRevised",
            EventBody::ActualRecorded(_) => "ActualRecorded",
            EventBody::Scored(_) => "Scored",
        }
    }

    fn payload(&self) -> Value {
        let v = match self {
            EventBody::SessionCreated(p) => serde_json::to_value(p),
            EventBody::ParticipantJoined(p) => serde_json::to_value(p),
            EventBody::StoryAdded(p) => serde_json::to_value(p),
            EventBody::EstimationOpened(p) => serde_json::to_value(p),
            EventBody::EstimateSubmitted(p) => serde_json::to_value(p),
            EventBody::ClarificationRaised(p) => serde_json::to_value(p),
            EventBody::Revealed(p) => serde_json::to_value(p),
            EventBody::Committed(p) => serde_json::to_value(p),
            EventBody::SprintStarted(p) => serde_json::to_value(p),
            EventBody::EstimateRevised(p) => serde_json::to_value(p),
            EventBody::ActualRecorded(p) => serde_json::to_value(p),
            EventBody::Scored(p) => serde_json::to_value(p),
        };
        v.expect("payload types serialize infallibly")
    }

    fn from_parts(kind: &str, payload: Value) -> Result<Self, SessionError> {
        fn p<T: serde::de::DeserializeOwned>(kind: &str, v: Value) -> Result<T, SessionError> {
            serde_json::from_value(v)
                .map_err(|e| SessionError::MalformedEvent(format!("{kind}: {e}")))
        }
        Ok(match kind {
            "SessionCreated" => EventBody::SessionCreated(p(kind, payload)?),
            "ParticipantJoined" => EventBody::ParticipantJoined(p(kind, payload)?),
            "StoryAdded" => EventBody::StoryAdded(p(kind, payload)?),
            "EstimationOpened" => EventBody::EstimationOpened(p(kind, payload)?),
            "EstimateSubmitted" => EventBody::EstimateSubmitted(p(kind, payload)?),
            "ClarificationRaised" => EventBody::ClarificationRaised(p(kind, payload)?),
            "Revealed" => EventBody::Revealed(p(kind, payload)?),
            "Committed" => EventBody::Committed(p(kind, payload)?),
            "SprintStarted" => EventBody::SprintStarted(p(kind, payload)?),
            "EstimateRevised" => EventBody::EstimateRevised(p(kind, payload)?),
            "ActualRecorded" => EventBody::ActualRecorded(p(kind, payload)?),
            "Scored" => EventBody::Scored(p(kind, payload)?),
            other => return Err(SessionError::UnknownEventKind(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEvent {
    pub seq: u64,
    pub at: Timestamp,
    pub body: EventBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEvent {
    seq: u64,
    kind: String,
    at: String,
    payload: Value,
}

pub fn format_timestamp(at: &Timestamp) -> String {
    at.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

impl SessionEvent {
    pub fn to_json_line(&self) -> String {
        let wire = WireEvent {
            seq: self.seq,
            kind: self.body.kind().to_string(),
            at: format_timestamp(&self.at),
            payload: self.body.payload(),
        };
        serde_json::to_string(&wire).expect("event serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self, SessionError> {
        let wire: WireEvent = serde_json::from_str(line)
            .map_err(|e| SessionError::MalformedEvent(e.to_string()))?;
        let at = DateTime::parse_from_rfc3339(&wire.at)
            .map_err(|e| SessionError::MalformedEvent(format!("bad timestamp {:?}: {e}", wire.at)))?
            .with_timezone(&Utc);
        Ok(Self { seq: wire.seq, at, body: EventBody::from_parts(&wire.kind, wire.payload)? })
    }
}

/// Encodes events as JSON Lines (trailing newline after every event).
pub fn encode_jsonl(events: &[SessionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}

/// Decodes JSON Lines; blank lines are skipped.
pub fn decode_jsonl(text: &str) -> Result<Vec<SessionEvent>, SessionError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(SessionEvent::from_json_line)
        .collect()
}
