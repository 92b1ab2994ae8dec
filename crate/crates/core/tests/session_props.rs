mod common;

use std::collections::HashMap;

use common::{apply, build, op, Clock, Op};
use pointwise_core::ledger::{leaderboard, EventStore};
use pointwise_core::session::{decode_jsonl, encode_jsonl, replay, SessionError, StoryState};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn commands_only_move_stories_forward(ops in prop::collection::vec(op(), 0..60)) {
        let mut clock = Clock::new();
        let mut s = common::new_session("sm", &mut clock);
        let mut sealed: HashMap<(String, String), String> = HashMap::new();
        for o in &ops {
            let before_state = s.state_json();
            let before_len = s.events().len();
            let before: HashMap<String, StoryState> =
                s.stories().iter().map(|x| (x.story_id.clone(), x.state)).collect();
            match apply(&mut s, o, &mut clock) {
                Err(_) if !matches!(o, Op::Advance(..)) => {
                    prop_assert_eq!(s.state_json(), before_state);
                    prop_assert_eq!(s.events().len(), before_len);
                }
                _ => {}
            }
            for story in s.stories() {
                if let Some(&prev) = before.get(&story.story_id) {
                    prop_assert!(
                        story.state == prev || Some(story.state) == prev.next(),
                        "{} jumped {:?} -> {:?}", story.story_id, prev, story.state
                    );
                }
            }
            for story in s.stories() {
                for e in s.estimates_for(&story.story_id) {
                    let key = (e.story_id.clone(), e.participant_id.clone());
                    let original = serde_json::to_string(&e.value).unwrap();
                    let first = sealed.entry(key).or_insert_with(|| original.clone());
                    prop_assert_eq!(&*first, &original);
                }
            }
        }
    }

    #[test]
    fn resubmission_is_rejected_and_log_untouched(ops in prop::collection::vec(op(), 0..40), v in 0usize..7) {
        let mut s = build("seal", &ops);
        let mut clock = Clock::new();
        let sealed: Vec<(String, String)> = s
            .stories()
            .iter()
            .flat_map(|st| s.estimates_for(&st.story_id).map(|e| (e.story_id.clone(), e.participant_id.clone())))
            .collect();
        for (story, pid) in sealed {
            let len = s.events().len();
            let value = s.scale().values()[v];
            let result = s.submit_estimate(&story, &pid, value, clock.tick());
            prop_assert!(result.is_err());
            if s.story(&story).unwrap().state == StoryState::Estimating {
                prop_assert_eq!(result, Err(SessionError::AlreadySealed));
            }
            prop_assert_eq!(s.events().len(), len);
        }
    }

    #[test]
    fn reveal_view_carries_no_identity(ops in prop::collection::vec(op(), 0..60)) {
        let s = build("anon", &ops);
        for story in s.stories() {
            if let Some(view) = s.reveal_view(&story.story_id) {
                let json = serde_json::to_string(&view).unwrap();
                for p in s.participants() {
                    prop_assert!(!json.contains(&format!("\"{}\"", p.participant_id)), "{}", json);
                    prop_assert!(!json.contains(&p.display_name), "{}", json);
                }
            }
        }
    }

    #[test]
    fn points_are_conserved_and_scoring_is_idempotent(ops in prop::collection::vec(op(), 0..80)) {
        let mut s = build("ledger", &ops);
        let mut sums: HashMap<String, i64> = HashMap::new();
        for b in s.scores().iter().flat_map(|sc| &sc.breakdowns) {
            prop_assert_eq!(
                b.total,
                b.accuracy_points + b.stag_points + b.contribution_points + b.adaptability_bonus
            );
            *sums.entry(b.participant_id.clone()).or_insert(0) += b.total;
        }
        for p in s.participants() {
            prop_assert_eq!(p.cumulative_points, sums.get(&p.participant_id).copied().unwrap_or(0));
        }
        let board: i64 = leaderboard(&s).iter().map(|e| e.cumulative_points).sum();
        prop_assert_eq!(board, sums.values().sum::<i64>());

        let scored: Vec<String> = s.scores().iter().map(|x| x.story_id.clone()).collect();
        let points: Vec<i64> = s.participants().iter().map(|p| p.cumulative_points).collect();
        let mut clock = Clock::new();
        for story in scored {
            prop_assert_eq!(s.score_story(&story, clock.tick()), Err(SessionError::AlreadyScored));
        }
        prop_assert_eq!(s.participants().iter().map(|p| p.cumulative_points).collect::<Vec<_>>(), points);
    }

    #[test]
    fn replay_reproduces_state_byte_for_byte(ops in prop::collection::vec(op(), 0..80)) {
        let s = build("replay", &ops);
        let log = encode_jsonl(s.events());
        let rebuilt = replay(&decode_jsonl(&log).unwrap()).unwrap();
        prop_assert_eq!(rebuilt.state_json(), s.state_json());
        prop_assert_eq!(encode_jsonl(rebuilt.events()), log);
    }
}

#[test]
fn lifecycle_reaches_scoring_through_advance() {
    let ops = vec![
        Op::Join(0),
        Op::Join(1),
        Op::Join(2),
        Op::AddStory,
        Op::Advance(0, 1),
        Op::Advance(0, 1),
        Op::Advance(0, 1),
        Op::Advance(0, 1),
        Op::Advance(0, 1),
        Op::Advance(0, 1),
    ];
    let s = build("walk", &ops);
    assert_eq!(s.stories()[0].state, StoryState::Scored);
    assert_eq!(s.scores().len(), 1);
}

#[test]
fn store_round_trip_matches_in_memory_session() {
    let dir = tempfile::tempdir().unwrap();
    let store = EventStore::open(dir.path()).unwrap();
    let mut clock = Clock::new();
    let mut s = common::new_session("disk", &mut clock);
    store.create(&s).unwrap();
    let script = [
        Op::Join(0),
        Op::Join(1),
        Op::AddStory,
        Op::Advance(0, 3),
        Op::Advance(0, 3),
        Op::Advance(0, 3),
        Op::Advance(0, 3),
        Op::Revise(0, 0, 2),
        Op::Advance(0, 3),
        Op::Advance(0, 3),
    ];
    for o in &script {
        let before = s.events().len();
        apply(&mut s, o, &mut clock).unwrap();
        store.append("disk", &s.events()[before..]).unwrap();
    }
    let loaded = store.load("disk").unwrap();
    assert_eq!(loaded.state_json(), s.state_json());
    assert_eq!(std::fs::read_to_string(store.log_path("disk")).unwrap(), encode_jsonl(s.events()));
}
