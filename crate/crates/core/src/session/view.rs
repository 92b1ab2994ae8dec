//! Read-only projections of a session that are safe to hand to clients.
//!
//! Nothing here maps a participant to an estimate value. While a story is
//! still being estimated only the number of sealed estimates is visible.

use serde::Serialize;

use super::{Session, StoryScore, StoryState};
use crate::games::PayoffConfig;
use crate::scalar::{serde_rational, Rational};
use crate::{Effort, Points, Scale};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevealView {
    pub story_id: String,
    /// Sealed values in ascending order, without identities.
    pub values: Vec<Points>,
    #[serde(with = "serde_rational")]
    pub spread_ratio: Rational,
    /// Set when max / min exceeds the session's spread threshold.
    pub inconsistent: bool,
}

impl RevealView {
    pub(super) fn new(story_id: &str, mut values: Vec<Points>, threshold: &Rational) -> Self {
        values.sort_by(|a, b| a.get().cmp(b.get()));
        let spread_ratio = match (values.first(), values.last()) {
            (Some(lo), Some(hi)) => *hi.get() / *lo.get(),
            _ => Rational::from_integer(1),
        };
        RevealView {
            story_id: story_id.to_string(),
            values,
            inconsistent: spread_ratio > *threshold,
            spread_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantView {
    pub participant_id: String,
    pub display_name: String,
    pub cumulative_points: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoryView {
    pub story_id: String,
    pub role: String,
    pub function: String,
    pub benefit: String,
    pub state: StoryState,
    pub sprint: u32,
    pub submitted_count: usize,
    pub clarification_count: usize,
    pub reveal: Option<RevealView>,
    pub final_estimate: Option<Points>,
    pub actual: Option<Effort>,
    pub score: Option<StoryScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub version: u64,
    pub sprint_counter: u32,
    pub scale: Scale,
    pub cfg: PayoffConfig,
    pub participants: Vec<ParticipantView>,
    pub stories: Vec<StoryView>,
}

impl Session {
    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.session_id.clone(),
            version: self.version(),
            sprint_counter: self.sprint_counter,
            scale: self.scale.clone(),
            cfg: self.cfg.clone(),
            participants: self
                .participants
                .iter()
                .map(|p| ParticipantView {
                    participant_id: p.participant_id.clone(),
                    display_name: p.display_name.clone(),
                    cumulative_points: p.cumulative_points,
                })
                .collect(),
            stories: self
                .stories
                .iter()
                .map(|s| StoryView {
                    story_id: s.story_id.clone(),
                    role: s.role.clone(),
                    function: s.function.clone(),
                    benefit: s.benefit.clone(),
                    state: s.state,
                    sprint: s.sprint,
                    submitted_count: self.estimates_for(&s.story_id).count(),
                    clarification_count: self
                        .clarifications
                        .iter()
                        .filter(|c| c.story_id == s.story_id)
                        .count(),
                    reveal: self.reveal_view(&s.story_id),
                    final_estimate: s.final_estimate.clone(),
                    actual: s.actual.clone(),
                    score: self.score_for(&s.story_id).cloned(),
                })
                .collect(),
        }
    }
}

impl StoryState {
    pub fn is_sealed(self) -> bool {
        self <= StoryState::Estimating
    }
}
