use pointwise_core::equilibrium::{
    analyze, build_stag_game, find_dominant, find_pure_nash, solve_mixed_2x2, DominanceKind,
    NormalFormGame, StrategyProfile,
};
use pointwise_core::games::PayoffConfig;
use pointwise_core::Rational;
use proptest::prelude::*;

/// Small random games with integer payoffs in [-5, 5].
fn game() -> impl Strategy<Value = NormalFormGame<Rational>> {
    prop::collection::vec(1usize..4, 1..4).prop_flat_map(|counts| {
        let cells: usize = counts.iter().product();
        let players = counts.len();
        prop::collection::vec(-5i64..=5, cells * players).prop_map(move |flat| {
            let mut it = flat.into_iter();
            NormalFormGame::from_fn(counts.clone(), |_| {
                (0..players).map(|_| Rational::from_integer(it.next().unwrap())).collect()
            })
            .unwrap()
        })
    })
}

fn all_profiles(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &k in counts {
        out = out
            .into_iter()
            .flat_map(|p| (0..k).map(move |s| [p.clone(), vec![s]].concat()))
            .collect();
    }
    out
}

fn is_stable(g: &NormalFormGame<Rational>, profile: &[usize]) -> bool {
    let here = g.payoff(&StrategyProfile(profile.to_vec()));
    (0..profile.len()).all(|p| {
        (0..g.strategy_counts()[p]).all(|s| {
            let mut dev = profile.to_vec();
            dev[p] = s;
            g.payoff(&StrategyProfile(dev))[p] <= here[p]
        })
    })
}

proptest! {
    #[test]
    fn nash_set_matches_deviation_recheck(g in game()) {
        let found: Vec<Vec<usize>> = find_pure_nash(&g).into_iter().map(|p| p.0).collect();
        let expected: Vec<Vec<usize>> =
            all_profiles(g.strategy_counts()).into_iter().filter(|p| is_stable(&g, p)).collect();
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn strict_dominance_profile_is_nash(g in game()) {
        let dom: Vec<_> = (0..g.player_count()).map(|p| find_dominant(&g, p).unwrap()).collect();
        if dom.iter().all(|d| matches!(d, Some(d) if d.kind == DominanceKind::Strict)) {
            let profile = StrategyProfile(dom.iter().map(|d| d.unwrap().strategy).collect());
            prop_assert!(find_pure_nash(&g).contains(&profile));
        }
    }

    #[test]
    fn positive_rescaling_keeps_equilibria(g in game(), num in 1i64..20, den in 1i64..20) {
        let scaled = g.scaled(&Rational::new(num, den));
        prop_assert_eq!(find_pure_nash(&scaled), find_pure_nash(&g));
        for p in 0..g.player_count() {
            prop_assert_eq!(find_dominant(&scaled, p).unwrap(), find_dominant(&g, p).unwrap());
        }
    }

    #[test]
    fn mixed_solution_makes_both_players_indifferent(cells in prop::collection::vec(-20i32..=20, 8)) {
        let g = NormalFormGame::<f64>::from_fn(vec![2, 2], |p| {
            let i = (p.0[0] * 2 + p.0[1]) * 2;
            vec![f64::from(cells[i]) / 3.0, f64::from(cells[i + 1]) / 7.0]
        })
        .unwrap();
        if let Some(m) = solve_mixed_2x2(&g).unwrap() {
            let a = |r: usize, c: usize| g.payoff(&StrategyProfile(vec![r, c]))[0];
            let b = |r: usize, c: usize| g.payoff(&StrategyProfile(vec![r, c]))[1];
            let (p, q) = (m.row_first, m.column_first);
            let row_gap = (q * a(0, 0) + (1.0 - q) * a(0, 1)) - (q * a(1, 0) + (1.0 - q) * a(1, 1));
            let col_gap = (p * b(0, 0) + (1.0 - p) * b(1, 0)) - (p * b(0, 1) + (1.0 - p) * b(1, 1));
            prop_assert!(row_gap.abs() <= 1e-9 && col_gap.abs() <= 1e-9, "{row_gap} {col_gap}");
            prop_assert!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0);
        }
    }
}

#[test]
fn team_game_is_dominance_solvable_for_every_size() {
    let cfg = PayoffConfig::default();
    for n in 2..=8 {
        let g = build_stag_game::<Rational>(n, &cfg).unwrap();
        assert_eq!(find_pure_nash(&g), vec![StrategyProfile(vec![0; n])]);
        let report = analyze(&g);
        assert!(report
            .dominant_strategies
            .iter()
            .all(|d| d.is_some_and(|d| d.strategy == 0 && d.kind == DominanceKind::Strict)));
    }
}

#[test]
fn float_and_exact_team_games_agree() {
    let cfg = PayoffConfig::default();
    for n in 2..=6 {
        let exact = build_stag_game::<Rational>(n, &cfg).unwrap();
        let float = build_stag_game::<f64>(n, &cfg).unwrap();
        let f32g = build_stag_game::<f32>(n, &cfg).unwrap();
        assert_eq!(find_pure_nash(&exact), find_pure_nash(&float));
        assert_eq!(find_pure_nash(&exact), find_pure_nash(&f32g));
    }
}
