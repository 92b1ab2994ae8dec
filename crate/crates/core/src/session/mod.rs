//! Event-sourced estimation sessions.
//!
//! Every mutation is expressed as a [`SessionEvent`] and applied through one
//! fold function, so a session rebuilt by [`replay`] goes through exactly the
//! same validation as the live one. Timestamps always come from the caller.

mod event;
mod view;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use event::{
    decode_jsonl, encode_jsonl, format_timestamp, ActualRecorded, ClarificationRaised, Committed,
    EstimateRevised, EstimateSubmitted, EventBody, ParticipantJoined, Revealed, SessionCreated,
    SessionEvent, SprintStarted, StoryAdded, StoryRef, Timestamp,
};
pub use view::{ParticipantView, RevealView, SessionView, StoryView};

use crate::games::{
    classify_accuracy, classify_choice, stag_payoffs, vickrey_payoff, vickrey_select, ActualEffort,
    GameError, PayoffConfig,
};
use crate::scalar::serde_rational;
use crate::{Effort, Points, Rational, Scale};

/// Reveal flags the estimates for discussion when max / min exceeds this.
pub fn default_spread_threshold() -> Rational {
    Rational::from_integer(2)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown participant {0}")]
    UnknownParticipant(String),
    #[error("unknown story {0}")]
    UnknownStory(String),
    #[error("display name {0:?} is already taken")]
    DuplicateName(String),
    #[error("estimate already sealed")]
    AlreadySealed,
    #[error("story is not open for estimation")]
    StoryNotEstimating,
    #[error("{0} is not on the session scale")]
    ValueNotOnScale(String),
    #[error("only {submitted} of {expected} participants have submitted")]
    NotAllSubmitted { submitted: usize, expected: usize },
    #[error("no estimates were submitted")]
    NoEstimates,
    #[error("story has not been revealed")]
    StoryNotRevealed,
    #[error("story is not in progress")]
    StoryNotInProgress,
    #[error("participant has no sealed estimate for this story")]
    NoOriginalEstimate,
    #[error("actual effort must be positive, got {0}")]
    NonPositiveActual(String),
    #[error("story is not done")]
    StoryNotDone,
    #[error("story already scored")]
    AlreadyScored,
    #[error("story cannot move from {from} to {to}")]
    InvalidTransition { from: StoryState, to: StoryState },
    #[error("event sequence gap: expected {expected}, found {found:?}")]
    GapInSequence { expected: u64, found: Option<u64> },
    #[error("unknown event kind {0:?}")]
    UnknownEventKind(String),
    #[error("malformed event: {0}")]
    MalformedEvent(String),
}

impl From<GameError> for SessionError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::ValueNotOnScale(v) => SessionError::ValueNotOnScale(v),
            GameError::NonPositiveActual(v) => SessionError::NonPositiveActual(v),
            GameError::EmptyEstimateSet => SessionError::NoEstimates,
            other => SessionError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StoryState {
    Draft,
    Estimating,
    Revealed,
    Committed,
    InProgress,
    Done,
    Scored,
}

impl StoryState {
    pub fn next(self) -> Option<StoryState> {
        use StoryState::*;
        match self {
            Draft => Some(Estimating),
            Estimating => Some(Revealed),
            Revealed => Some(Committed),
            Committed => Some(InProgress),
            InProgress => Some(Done),
            Done => Some(Scored),
            Scored => None,
        }
    }
}

impl fmt::Display for StoryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: String,
    pub display_name: String,
    pub cumulative_points: i64,
}

/// "As a `role`, I want to `function` so that I can `benefit`."
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStory {
    pub story_id: String,
    pub role: String,
    pub function: String,
    pub benefit: String,
    pub state: StoryState,
    pub final_estimate: Option<Points>,
    pub actual: Option<Effort>,
    pub sprint: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SealedEstimate {
    pub story_id: String,
    pub participant_id: String,
    pub value: Points,
    pub submitted_at: Timestamp,
    pub revised_value: Option<Points>,
    pub revision_note: Option<String>,
}

impl SealedEstimate {
    /// Latest revision if any, else the sealed value.
    pub fn effective(&self) -> &Points {
        self.revised_value.as_ref().unwrap_or(&self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarificationRequest {
    pub story_id: String,
    pub participant_id: String,
    pub question: String,
    pub raised_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub participant_id: String,
    pub accuracy_points: i64,
    pub stag_points: i64,
    pub contribution_points: i64,
    pub adaptability_bonus: i64,
    pub total: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryScore {
    pub story_id: String,
    pub breakdowns: Vec<ScoreBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    session_id: String,
    scale: Scale,
    cfg: PayoffConfig,
    #[serde(with = "serde_rational")]
    spread_threshold: Rational,
    sprint_counter: u32,
    participants: Vec<Participant>,
    stories: Vec<UserStory>,
    estimates: Vec<SealedEstimate>,
    clarifications: Vec<ClarificationRequest>,
    scores: Vec<StoryScore>,
    #[serde(skip)]
    log: Vec<SessionEvent>,
}

/// Session ids double as file names: 1-128 characters of `[A-Za-z0-9_-]`.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn non_empty(field: &str, text: &str) -> Result<(), SessionError> {
    if text.trim().is_empty() {
        Err(SessionError::InvalidInput(format!("{field} must not be empty")))
    } else {
        Ok(())
    }
}

impl Session {
    /// Starts a session in sprint 1 with the `SessionCreated` event.
    pub fn create(
        session_id: &str,
        scale: Scale,
        cfg: PayoffConfig,
        at: Timestamp,
    ) -> Result<Session, SessionError> {
        let created = SessionCreated {
            session_id: session_id.to_string(),
            scale,
            cfg,
            spread_threshold: default_spread_threshold(),
        };
        Self::from_created(SessionEvent { seq: 1, at, body: EventBody::SessionCreated(created) })
    }

    fn from_created(event: SessionEvent) -> Result<Session, SessionError> {
        let EventBody::SessionCreated(created) = &event.body else {
            return Err(SessionError::MalformedEvent(
                "first event must be SessionCreated".into(),
            ));
        };
        if event.seq != 1 {
            return Err(SessionError::GapInSequence { expected: 1, found: Some(event.seq) });
        }
        if !valid_session_id(&created.session_id) {
            return Err(SessionError::InvalidInput(format!(
                "session id {:?} must be 1-128 characters of [A-Za-z0-9_-]",
                created.session_id
            )));
        }
        created.cfg.validate().map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        if created.spread_threshold < Rational::from_integer(1) {
            return Err(SessionError::InvalidConfig("spread_threshold must be >= 1".into()));
        }
        Ok(Session {
            session_id: created.session_id.clone(),
            scale: created.scale.clone(),
            cfg: created.cfg.clone(),
            spread_threshold: created.spread_threshold,
            sprint_counter: 1,
            participants: Vec::new(),
            stories: Vec::new(),
            estimates: Vec::new(),
            clarifications: Vec::new(),
            scores: Vec::new(),
            log: vec![event],
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn cfg(&self) -> &PayoffConfig {
        &self.cfg
    }

    pub fn sprint_counter(&self) -> u32 {
        self.sprint_counter
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn stories(&self) -> &[UserStory] {
        &self.stories
    }

    pub fn scores(&self) -> &[StoryScore] {
        &self.scores
    }

    pub fn clarifications(&self) -> &[ClarificationRequest] {
        &self.clarifications
    }

    /// Sealed estimates of one story, in submission order.
    pub fn estimates_for<'a>(&'a self, story_id: &'a str) -> impl Iterator<Item = &'a SealedEstimate> {
        self.estimates.iter().filter(move |e| e.story_id == story_id)
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.log
    }

    /// Number of events applied; bumps on every accepted mutation.
    pub fn version(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn story(&self, story_id: &str) -> Result<&UserStory, SessionError> {
        self.stories
            .iter()
            .find(|s| s.story_id == story_id)
            .ok_or_else(|| SessionError::UnknownStory(story_id.to_string()))
    }

    pub fn participant(&self, participant_id: &str) -> Result<&Participant, SessionError> {
        self.participants
            .iter()
            .find(|p| p.participant_id == participant_id)
            .ok_or_else(|| SessionError::UnknownParticipant(participant_id.to_string()))
    }

    pub fn score_for(&self, story_id: &str) -> Option<&StoryScore> {
        self.scores.iter().find(|s| s.story_id == story_id)
    }

    /// Canonical JSON of the full (private) state, excluding the log.
    pub fn state_json(&self) -> String {
        serde_json::to_string(self).expect("session serializes")
    }

    fn story_index(&self, story_id: &str) -> Result<usize, SessionError> {
        self.stories
            .iter()
            .position(|s| s.story_id == story_id)
            .ok_or_else(|| SessionError::UnknownStory(story_id.to_string()))
    }

    fn require_state(
        &self,
        story_id: &str,
        wanted: StoryState,
        err: SessionError,
    ) -> Result<usize, SessionError> {
        let idx = self.story_index(story_id)?;
        if self.stories[idx].state == wanted {
            Ok(idx)
        } else {
            Err(err)
        }
    }

    fn on_scale(&self, value: &Rational) -> Result<Points, SessionError> {
        Ok(self.scale.value(*value)?)
    }

    fn emit(&mut self, at: Timestamp, body: EventBody) -> Result<(), SessionError> {
        let event = SessionEvent { seq: self.version() + 1, at, body };
        self.apply(event)
    }

    /// Validates `event` against the current state and folds it in. On error
    /// the session is left untouched.
    pub fn apply(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        let expected = self.version() + 1;
        if event.seq != expected {
            return Err(SessionError::GapInSequence { expected, found: Some(event.seq) });
        }
        let at = event.at;
        match &event.body {
            EventBody::SessionCreated(_) => {
                return Err(SessionError::MalformedEvent("session already created".into()));
            }
            EventBody::ParticipantJoined(p) => {
                non_empty("display name", &p.display_name)?;
                non_empty("participant id", &p.participant_id)?;
                if self.participants.iter().any(|x| x.display_name == p.display_name) {
                    return Err(SessionError::DuplicateName(p.display_name.clone()));
                }
                if self.participants.iter().any(|x| x.participant_id == p.participant_id) {
                    return Err(SessionError::InvalidInput(format!(
                        "participant id {} already used",
                        p.participant_id
                    )));
                }
                self.participants.push(Participant {
                    participant_id: p.participant_id.clone(),
                    display_name: p.display_name.clone(),
                    cumulative_points: 0,
                });
            }
            EventBody::StoryAdded(s) => {
                non_empty("story id", &s.story_id)?;
                non_empty("role", &s.role)?;
                non_empty("function", &s.function)?;
                if self.story_index(&s.story_id).is_ok() {
                    return Err(SessionError::InvalidInput(format!(
                        "story id {} already used",
                        s.story_id
                    )));
                }
                self.stories.push(UserStory {
                    story_id: s.story_id.clone(),
                    role: s.role.clone(),
                    function: s.function.clone(),
                    benefit: s.benefit.clone(),
                    state: StoryState::Draft,
                    final_estimate: None,
                    actual: None,
                    sprint: self.sprint_counter,
                });
            }
            EventBody::EstimationOpened(r) => {
                let idx = self.story_index(&r.story_id)?;
                let from = self.stories[idx].state;
                if from != StoryState::Draft {
                    return Err(SessionError::InvalidTransition { from, to: StoryState::Estimating });
                }
                self.stories[idx].state = StoryState::Estimating;
            }
            EventBody::EstimateSubmitted(e) => {
                self.participant(&e.participant_id)?;
                self.require_state(&e.story_id, StoryState::Estimating, SessionError::StoryNotEstimating)?;
                let value = self.on_scale(e.value.get())?;
                if self.has_estimate(&e.story_id, &e.participant_id) {
                    return Err(SessionError::AlreadySealed);
                }
                self.estimates.push(SealedEstimate {
                    story_id: e.story_id.clone(),
                    participant_id: e.participant_id.clone(),
                    value,
                    submitted_at: at,
                    revised_value: None,
                    revision_note: None,
                });
            }
            EventBody::ClarificationRaised(c) => {
                self.participant(&c.participant_id)?;
                self.require_state(&c.story_id, StoryState::Estimating, SessionError::StoryNotEstimating)?;
                non_empty("question", &c.question)?;
                self.clarifications.push(ClarificationRequest {
                    story_id: c.story_id.clone(),
                    participant_id: c.participant_id.clone(),
                    question: c.question.clone(),
                    raised_at: at,
                });
            }
            EventBody::Revealed(r) => {
                let idx = self.require_state(&r.story_id, StoryState::Estimating, SessionError::StoryNotEstimating)?;
                let submitted = self.estimates_for(&r.story_id).count();
                let expected = self.participants.len();
                if submitted < expected && !r.quorum_override {
                    return Err(SessionError::NotAllSubmitted { submitted, expected });
                }
                if submitted == 0 {
                    return Err(SessionError::NoEstimates);
                }
                self.stories[idx].state = StoryState::Revealed;
            }
            EventBody::Committed(c) => {
                let idx = self.require_state(&c.story_id, StoryState::Revealed, SessionError::StoryNotRevealed)?;
                let sealed: Vec<Points> =
                    self.estimates_for(&c.story_id).map(|e| e.value.clone()).collect();
                let chosen = vickrey_select(&sealed)?;
                if chosen != c.final_estimate {
                    return Err(SessionError::MalformedEvent(format!(
                        "committed {} but the second-highest sealed estimate is {}",
                        c.final_estimate, chosen
                    )));
                }
                let story = &mut self.stories[idx];
                story.final_estimate = Some(chosen);
                story.state = StoryState::Committed;
            }
            EventBody::SprintStarted(s) => {
                if s.sprint != self.sprint_counter {
                    return Err(SessionError::MalformedEvent(format!(
                        "sprint {} started while planning sprint {}",
                        s.sprint, self.sprint_counter
                    )));
                }
                for story in &mut self.stories {
                    if story.state == StoryState::Committed {
                        story.state = StoryState::InProgress;
                    }
                }
                self.sprint_counter += 1;
            }
            EventBody::EstimateRevised(r) => {
                self.participant(&r.participant_id)?;
                self.require_state(&r.story_id, StoryState::InProgress, SessionError::StoryNotInProgress)?;
                let value = self.on_scale(r.value.get())?;
                let sealed = self
                    .estimates
                    .iter_mut()
                    .find(|e| e.story_id == r.story_id && e.participant_id == r.participant_id)
                    .ok_or(SessionError::NoOriginalEstimate)?;
                sealed.revised_value = Some(value);
                sealed.revision_note = Some(r.note.clone());
            }
            EventBody::ActualRecorded(a) => {
                let idx = self.require_state(&a.story_id, StoryState::InProgress, SessionError::StoryNotInProgress)?;
                let actual = ActualEffort::new(*a.actual.get())?;
                let story = &mut self.stories[idx];
                story.actual = Some(actual);
                story.state = StoryState::Done;
            }
            EventBody::Scored(r) => {
                let idx = self.story_index(&r.story_id)?;
                match self.stories[idx].state {
                    StoryState::Done => {}
                    StoryState::Scored => return Err(SessionError::AlreadyScored),
                    _ => return Err(SessionError::StoryNotDone),
                }
                let score = self.compute_score(idx)?;
                for b in &score.breakdowns {
                    let p = self
                        .participants
                        .iter_mut()
                        .find(|p| p.participant_id == b.participant_id)
                        .expect("scored participants are joined");
                    p.cumulative_points += b.total;
                }
                self.scores.push(score);
                self.stories[idx].state = StoryState::Scored;
            }
        }
        self.log.push(event);
        Ok(())
    }

    fn has_estimate(&self, story_id: &str, participant_id: &str) -> bool {
        self.estimates
            .iter()
            .any(|e| e.story_id == story_id && e.participant_id == participant_id)
    }

    fn compute_score(&self, idx: usize) -> Result<StoryScore, SessionError> {
        let story = &self.stories[idx];
        let actual = story.actual.as_ref().ok_or(SessionError::StoryNotDone)?;
        let cfg = &self.cfg;
        // join order; participants without a sealed estimate get nothing
        let sealed: Vec<&SealedEstimate> = self
            .participants
            .iter()
            .filter_map(|p| {
                self.estimates_for(&story.story_id)
                    .find(|e| e.participant_id == p.participant_id)
            })
            .collect();
        if sealed.is_empty() {
            return Ok(StoryScore { story_id: story.story_id.clone(), breakdowns: Vec::new() });
        }
        let choices: Vec<_> =
            sealed.iter().map(|e| classify_choice(e.effective(), actual, cfg)).collect();
        let stag = stag_payoffs(&choices, cfg)?;
        let breakdowns = sealed
            .iter()
            .zip(stag)
            .map(|(e, stag_points)| {
                let band = classify_accuracy(e.effective(), actual, cfg);
                let accuracy_points = vickrey_payoff(band, cfg);
                let asked = self
                    .clarifications
                    .iter()
                    .filter(|c| c.story_id == story.story_id && c.participant_id == e.participant_id)
                    .count() as i64;
                let contribution_points = cfg.contribution_point * (1 + asked);
                let improved = e
                    .revised_value
                    .as_ref()
                    .is_some_and(|r| classify_accuracy(r, actual, cfg) < classify_accuracy(&e.value, actual, cfg));
                let adaptability_bonus = if improved { cfg.adaptability_bonus } else { 0 };
                ScoreBreakdown {
                    participant_id: e.participant_id.clone(),
                    accuracy_points,
                    stag_points,
                    contribution_points,
                    adaptability_bonus,
                    total: accuracy_points + stag_points + contribution_points + adaptability_bonus,
                }
            })
            .collect();
        Ok(StoryScore { story_id: story.story_id.clone(), breakdowns })
    }

    // ---- commands -------------------------------------------------------

    /// Adds a participant; ids are assigned as `p1`, `p2`, ….
    pub fn join(&mut self, display_name: &str, at: Timestamp) -> Result<String, SessionError> {
        let participant_id = format!("p{}", self.participants.len() + 1);
        self.emit(
            at,
            EventBody::ParticipantJoined(ParticipantJoined {
                participant_id: participant_id.clone(),
                display_name: display_name.trim().to_string(),
            }),
        )?;
        Ok(participant_id)
    }

    /// Adds a story to the sprint currently being planned; ids are `s1`, `s2`, ….
    pub fn add_story(
        &mut self,
        role: &str,
        function: &str,
        benefit: &str,
        at: Timestamp,
    ) -> Result<String, SessionError> {
        let story_id = format!("s{}", self.stories.len() + 1);
        self.emit(
            at,
            EventBody::StoryAdded(StoryAdded {
                story_id: story_id.clone(),
                role: role.to_string(),
                function: function.to_string(),
                benefit: benefit.to_string(),
            }),
        )?;
        Ok(story_id)
    }

    pub fn open_estimation(&mut self, story_id: &str, at: Timestamp) -> Result<(), SessionError> {
        self.emit(at, EventBody::EstimationOpened(StoryRef { story_id: story_id.into() }))
    }

    pub fn submit_estimate(
        &mut self,
        story_id: &str,
        participant_id: &str,
        value: Rational,
        at: Timestamp,
    ) -> Result<(), SessionError> {
        self.participant(participant_id)?;
        self.require_state(story_id, StoryState::Estimating, SessionError::StoryNotEstimating)?;
        let value = self.on_scale(&value)?;
        self.emit(
            at,
            EventBody::EstimateSubmitted(EstimateSubmitted {
                story_id: story_id.into(),
                participant_id: participant_id.into(),
                value,
            }),
        )
    }

    pub fn register_clarification(
        &mut self,
        story_id: &str,
        participant_id: &str,
        question: &str,
        at: Timestamp,
    ) -> Result<(), SessionError> {
        self.emit(
            at,
            EventBody::ClarificationRaised(ClarificationRaised {
                story_id: story_id.into(),
                participant_id: participant_id.into(),
                question: question.trim().to_string(),
            }),
        )
    }

    /// Reveals the anonymized estimates. Without `quorum_override` every
    /// joined participant must have submitted.
    pub fn reveal(
        &mut self,
        story_id: &str,
        quorum_override: bool,
        at: Timestamp,
    ) -> Result<RevealView, SessionError> {
        self.emit(
            at,
            EventBody::Revealed(Revealed { story_id: story_id.into(), quorum_override }),
        )?;
        Ok(self.reveal_view(story_id).expect("story just revealed"))
    }

    /// Commits the second-highest sealed estimate as the story's final estimate.
    pub fn commit_final(&mut self, story_id: &str, at: Timestamp) -> Result<Points, SessionError> {
        self.require_state(story_id, StoryState::Revealed, SessionError::StoryNotRevealed)?;
        let sealed: Vec<Points> = self.estimates_for(story_id).map(|e| e.value.clone()).collect();
        let final_estimate = vickrey_select(&sealed)?;
        self.emit(
            at,
            EventBody::Committed(Committed {
                story_id: story_id.into(),
                final_estimate: final_estimate.clone(),
            }),
        )?;
        Ok(final_estimate)
    }

    /// Moves every committed story into progress and opens planning for the
    /// next sprint. Returns the number of the sprint that started.
    pub fn start_sprint(&mut self, at: Timestamp) -> Result<u32, SessionError> {
        let sprint = self.sprint_counter;
        self.emit(at, EventBody::SprintStarted(SprintStarted { sprint }))?;
        Ok(sprint)
    }

    pub fn revise_estimate(
        &mut self,
        story_id: &str,
        participant_id: &str,
        new_value: Rational,
        note: &str,
        at: Timestamp,
    ) -> Result<(), SessionError> {
        self.participant(participant_id)?;
        self.require_state(story_id, StoryState::InProgress, SessionError::StoryNotInProgress)?;
        let value = self.on_scale(&new_value)?;
        self.emit(
            at,
            EventBody::EstimateRevised(EstimateRevised {
                story_id: story_id.into(),
                participant_id: participant_id.into(),
                value,
                note: note.to_string(),
            }),
        )
    }

    pub fn record_actual(
        &mut self,
        story_id: &str,
        actual: Rational,
        at: Timestamp,
    ) -> Result<(), SessionError> {
        self.require_state(story_id, StoryState::InProgress, SessionError::StoryNotInProgress)?;
        let actual = ActualEffort::new(actual)?;
        self.emit(
            at,
            EventBody::ActualRecorded(ActualRecorded { story_id: story_id.into(), actual }),
        )
    }

    pub fn score_story(&mut self, story_id: &str, at: Timestamp) -> Result<StoryScore, SessionError> {
        self.emit(at, EventBody::Scored(StoryRef { story_id: story_id.into() }))?;
        Ok(self.score_for(story_id).expect("story just scored").clone())
    }

    /// Anonymized view of a story's estimates; `None` before reveal.
    pub fn reveal_view(&self, story_id: &str) -> Option<RevealView> {
        let story = self.story(story_id).ok()?;
        if story.state < StoryState::Revealed {
            return None;
        }
        let values: Vec<Points> = self.estimates_for(story_id).map(|e| e.value.clone()).collect();
        Some(RevealView::new(story_id, values, &self.spread_threshold))
    }
}

/// Rebuilds a session by folding its event log.
pub fn replay(events: &[SessionEvent]) -> Result<Session, SessionError> {
    let (first, rest) = events
        .split_first()
        .ok_or(SessionError::GapInSequence { expected: 1, found: None })?;
    let mut session = Session::from_created(first.clone())?;
    for event in rest {
        session.apply(event.clone())?;
    }
    Ok(session)
}
