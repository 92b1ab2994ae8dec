#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use pointwise_core::games::PayoffConfig;
use pointwise_core::session::{Session, SessionError, StoryState};
use pointwise_core::{Rational, Scale};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum Op {
    Join(u8),
    AddStory,
    Open(usize),
    Submit(usize, usize, usize),
    Clarify(usize, usize),
    Reveal(usize, bool),
    Commit(usize),
    StartSprint,
    Revise(usize, usize, usize),
    Actual(usize, i64),
    Score(usize),
    /// Does whatever the story needs next, with everyone agreeing.
    Advance(usize, usize),
}

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        2 => (0u8..6).prop_map(Op::Join),
        2 => Just(Op::AddStory),
        1 => (0usize..4).prop_map(Op::Open),
        3 => (0usize..6, 0usize..4, 0usize..8).prop_map(|(p, s, v)| Op::Submit(p, s, v)),
        1 => (0usize..6, 0usize..4).prop_map(|(p, s)| Op::Clarify(p, s)),
        1 => (0usize..4, any::<bool>()).prop_map(|(s, q)| Op::Reveal(s, q)),
        1 => (0usize..4).prop_map(Op::Commit),
        1 => Just(Op::StartSprint),
        2 => (0usize..6, 0usize..4, 0usize..7).prop_map(|(p, s, v)| Op::Revise(p, s, v)),
        1 => (0usize..4, 0i64..60).prop_map(|(s, k)| Op::Actual(s, k)),
        1 => (0usize..4).prop_map(Op::Score),
        6 => (0usize..4, 0usize..7).prop_map(|(s, v)| Op::Advance(s, v)),
    ]
}

pub struct Clock(i64);

impl Clock {
    pub fn new() -> Self {
        Clock(0)
    }

    pub fn tick(&mut self) -> DateTime<Utc> {
        self.0 += 1;
        Utc.timestamp_opt(1_700_000_000 + self.0 * 7, 0).unwrap()
    }
}

pub fn new_session(id: &str, clock: &mut Clock) -> Session {
    Session::create(id, Scale::default(), PayoffConfig::default(), clock.tick()).unwrap()
}

fn pick<T: Clone>(items: &[T], i: usize) -> Option<T> {
    (!items.is_empty()).then(|| items[i % items.len()].clone())
}

/// Off-scale when `i` is past the end of the scale, to exercise rejection.
fn value(s: &Session, i: usize) -> Rational {
    s.scale().values().get(i).copied().unwrap_or(Rational::new(4, 1))
}

pub fn apply(s: &mut Session, op: &Op, clock: &mut Clock) -> Result<(), SessionError> {
    let pids: Vec<String> = s.participants().iter().map(|p| p.participant_id.clone()).collect();
    let sids: Vec<String> = s.stories().iter().map(|x| x.story_id.clone()).collect();
    let story = |i: usize| pick(&sids, i).unwrap_or_else(|| "s404".into());
    let person = |i: usize| pick(&pids, i).unwrap_or_else(|| "p404".into());
    let at = clock.tick();
    match op {
        Op::Join(n) => s.join(&format!("member-{n}"), at).map(drop),
        Op::AddStory => s.add_story("dev", "build it", "ship it", at).map(drop),
        Op::Open(i) => s.open_estimation(&story(*i), at),
        Op::Submit(p, i, v) => s.submit_estimate(&story(*i), &person(*p), value(s, *v), at),
        Op::Clarify(p, i) => s.register_clarification(&story(*i), &person(*p), "scope?", at),
        Op::Reveal(i, q) => s.reveal(&story(*i), *q, at).map(drop),
        Op::Commit(i) => s.commit_final(&story(*i), at).map(drop),
        Op::StartSprint => s.start_sprint(at).map(drop),
        Op::Revise(p, i, v) => s.revise_estimate(&story(*i), &person(*p), value(s, *v), "rethink", at),
        Op::Actual(i, k) => s.record_actual(&story(*i), Rational::new(*k, 4), at),
        Op::Score(i) => s.score_story(&story(*i), at).map(drop),
        Op::Advance(i, v) => {
            let sid = story(*i);
            let state = s.story(&sid)?.state;
            match state {
                StoryState::Draft => s.open_estimation(&sid, at),
                StoryState::Estimating => {
                    for (k, p) in pids.iter().enumerate() {
                        if s.estimates_for(&sid).all(|e| &e.participant_id != p) {
                            let val = value(s, (v + k) % s.scale().values().len());
                            s.submit_estimate(&sid, p, val, clock.tick())?;
                        }
                    }
                    s.reveal(&sid, true, clock.tick()).map(drop)
                }
                StoryState::Revealed => s.commit_final(&sid, at).map(drop),
                StoryState::Committed => s.start_sprint(at).map(drop),
                StoryState::InProgress => s.record_actual(&sid, value(s, *v), at),
                StoryState::Done => s.score_story(&sid, at).map(drop),
                StoryState::Scored => Ok(()),
            }
        }
    }
}

pub fn build(id: &str, ops: &[Op]) -> Session {
    let mut clock = Clock::new();
    let mut s = new_session(id, &mut clock);
    for op in ops {
        let _ = apply(&mut s, op, &mut clock);
    }
    s
}
