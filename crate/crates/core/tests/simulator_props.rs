use pointwise_core::games::{
    classify_accuracy, classify_choice, stag_payoffs, vickrey_payoff, ActualEffort, Choice,
    EstimationScale, PayoffConfig, ScaleValue,
};
use pointwise_core::simulator::{
    compare_mechanisms, run_simulation, run_simulation_traced, trace_to_jsonl, AgentSpec,
    LogNormalEffort, Mechanism, SimulationConfig, Strategy, TraceRecord,
};
use proptest::prelude::*;

fn team(seed: u64) -> SimulationConfig {
    let agents = vec![
        AgentSpec::honest("h", 0.2),
        AgentSpec::new("up", Strategy::Inflate { factor: 1.5 }, 0.3),
        AgentSpec::new("down", Strategy::Deflate { factor: 0.7 }, 0.1),
        AgentSpec::new("learn", Strategy::Learner { initial_sigma: 0.5, decay: 0.8 }, 0.0),
    ];
    let mut cfg = SimulationConfig::new(agents, 25, 6, seed);
    cfg.replications = 3;
    cfg
}

fn float_scale(cfg: &SimulationConfig) -> EstimationScale<f64> {
    cfg.scale.convert(|r| *r.numer() as f64 / *r.denom() as f64).unwrap()
}

#[test]
fn same_config_same_bytes() {
    let a = serde_json::to_string(&run_simulation(&team(11)).unwrap()).unwrap();
    let b = serde_json::to_string(&run_simulation(&team(11)).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&run_simulation(&team(12)).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn parallel_and_traced_runs_agree() {
    let (traced, trace) = run_simulation_traced(&team(5)).unwrap();
    assert_eq!(traced, run_simulation(&team(5)).unwrap());
    assert_eq!(trace.len(), 3 * 6 * 25);
    assert_eq!(trace_to_jsonl(&trace).lines().count(), trace.len());
}

#[test]
fn mechanisms_share_draws() {
    let reports = compare_mechanisms(&team(3), &Mechanism::ALL).unwrap();
    assert!(reports.windows(2).all(|w| w[0].draw_checksum == w[1].draw_checksum));
    // scoring is on individual bids, so only the committed estimate differs
    assert!(reports.windows(2).all(|w| w[0].agents == w[1].agents));
    let mechanisms: Vec<Mechanism> = reports.iter().map(|r| r.mechanism).collect();
    assert_eq!(mechanisms, Mechanism::ALL);
}

#[test]
fn learner_noise_only_shrinks() {
    let report = run_simulation(&team(8)).unwrap();
    let sigmas = &report.agent("learn").unwrap().sigma_by_sprint;
    assert_eq!(sigmas.len(), 6);
    assert!(sigmas.windows(2).all(|w| w[1] < w[0]));
    assert!(report.agent("h").unwrap().sigma_by_sprint.is_empty());
}

#[test]
fn added_agent_leaves_existing_draws_alone() {
    let base = SimulationConfig::new(vec![AgentSpec::honest("a", 0.3), AgentSpec::honest("b", 0.3)], 40, 2, 77);
    let mut bigger = base.clone();
    bigger.agents.push(AgentSpec::new("c", Strategy::Inflate { factor: 2.0 }, 0.5));
    let (_, t1) = run_simulation_traced(&base).unwrap();
    let (_, t2) = run_simulation_traced(&bigger).unwrap();
    for (x, y) in t1.iter().zip(&t2) {
        assert_eq!(x.actual, y.actual);
        assert_eq!(x.estimates[..], y.estimates[..2]);
    }
}

/// Re-scores every traced story with the game rules and rebuilds the
/// report's per-agent figures from scratch.
fn rescore(cfg: &SimulationConfig, trace: &[TraceRecord]) -> Vec<(f64, f64, f64)> {
    let scale = float_scale(cfg);
    let n = cfg.agents.len();
    let mut points = vec![0i64; n];
    let mut accuracy = vec![0i64; n];
    let mut coop = vec![0u64; n];
    for t in trace {
        let actual = ActualEffort::new(t.actual).unwrap();
        let bids: Vec<ScaleValue<f64>> = t.estimates.iter().map(|e| scale.value(*e).unwrap()).collect();
        let choices: Vec<Choice> = bids.iter().map(|b| classify_choice(b, &actual, &cfg.payoff)).collect();
        let stag = stag_payoffs(&choices, &cfg.payoff).unwrap();
        for i in 0..n {
            let acc = vickrey_payoff(classify_accuracy(&bids[i], &actual, &cfg.payoff), &cfg.payoff);
            accuracy[i] += acc;
            points[i] += acc + stag[i] + cfg.payoff.contribution_point;
            coop[i] += u64::from(choices[i] == Choice::Cooperate);
        }
    }
    let stories = trace.len() as f64;
    (0..n)
        .map(|i| (points[i] as f64 / stories, accuracy[i] as f64 / stories, coop[i] as f64 / stories))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_matches_independent_rescoring(
        seed in any::<u64>(),
        sigmas in prop::collection::vec(0.0f64..0.8, 1..6),
        stories in 1u32..30,
        sprints in 1u32..4,
        mech in 0usize..4,
    ) {
        let agents = sigmas.iter().enumerate().map(|(i, s)| AgentSpec::honest(format!("a{i}"), *s)).collect();
        let mut cfg = SimulationConfig::new(agents, stories, sprints, seed);
        cfg.mechanism = Mechanism::ALL[mech];
        let (report, trace) = run_simulation_traced(&cfg).unwrap();
        let scale = float_scale(&cfg);
        for t in &trace {
            prop_assert!(t.estimates.iter().all(|e| scale.contains(e)));
            prop_assert!(t.actual > 0.0);
            let bids: Vec<ScaleValue<f64>> = t.estimates.iter().map(|e| scale.value(*e).unwrap()).collect();
            prop_assert_eq!(t.final_estimate, cfg.mechanism.commit(&bids).unwrap());
        }
        for (agent, (points, accuracy, coop)) in report.agents.iter().zip(rescore(&cfg, &trace)) {
            prop_assert!((agent.mean_points_per_story - points).abs() < 1e-12);
            prop_assert!((agent.mean_accuracy_points - accuracy).abs() < 1e-12);
            prop_assert!((agent.cooperation_rate - coop).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&agent.cooperation_rate));
        }
        prop_assert!(report.mechanisms.iter().all(|m| m.mape >= 0.0));
        let mape: f64 = trace.iter().map(|t| (t.final_estimate - t.actual).abs() / t.actual).sum::<f64>()
            / trace.len() as f64;
        prop_assert!((report.mape(cfg.mechanism) - mape).abs() < 1e-9);
    }

    #[test]
    fn noiseless_honest_cooperates_whenever_the_scale_allows(seed in any::<u64>(), mu in 0.0f64..3.0) {
        let mut cfg = SimulationConfig::new(vec![AgentSpec::honest("h", 0.0)], 30, 1, seed);
        cfg.effort_distribution = LogNormalEffort { mu, sigma: 0.5 };
        let (report, trace) = run_simulation_traced(&cfg).unwrap();
        let scale = float_scale(&cfg);
        let band = cfg.payoff.band_as::<f64>();
        let mut all_coverable = true;
        for t in &trace {
            let snapped = *scale.nearest(&t.actual).get();
            let coverable = (snapped - t.actual).abs() / t.actual <= band;
            all_coverable &= coverable;
            if coverable {
                prop_assert_eq!(t.choices[0], Choice::Cooperate);
            }
        }
        if all_coverable {
            prop_assert_eq!(report.agents[0].cooperation_rate, 1.0);
        }
    }
}

#[test]
fn efforts_hugging_a_scale_value_give_full_cooperation() {
    let mut cfg = SimulationConfig::new(vec![AgentSpec::honest("h", 0.0)], 10, 1, 42);
    cfg.effort_distribution = LogNormalEffort { mu: 8f64.ln(), sigma: 0.02 };
    let (report, trace) = run_simulation_traced(&cfg).unwrap();
    assert!(trace.iter().all(|t| (t.actual - 8.0).abs() / t.actual < 0.1));
    assert_eq!(report.agents[0].cooperation_rate, 1.0);
    assert!(trace.iter().all(|t| t.estimates == [8.0]));
}

#[test]
fn default_payoffs_are_used_when_omitted() {
    let cfg: SimulationConfig = serde_json::from_str(
        r#"{"agents":[{"name":"a","strategy":{"kind":"honest"}}],"stories":1,"sprints":1,"seed":1}"#,
    )
    .unwrap();
    assert_eq!(cfg.payoff, PayoffConfig::default());
    assert_eq!(cfg.mechanism, Mechanism::SecondHighest);
}
