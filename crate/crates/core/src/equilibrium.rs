//! Finite normal-form games and brute-force solvers.
//!
//! Payoffs are stored in a flat table indexed by the mixed-radix encoding of
//! a strategy profile (player 0 is the most significant digit), so profile
//! enumeration order is lexicographic.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::games::{stag_payoffs, Choice, PayoffConfig};
use crate::scalar::{approx_eq, definitely_gt, Rational, Scalar};

/// Largest number of profiles the solvers will enumerate.
pub const MAX_PROFILES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquilibriumError {
    #[error("need at least {min} players, got {got}")]
    PlayerCountTooSmall { min: usize, got: usize },
    #[error("player {player} out of range for a {players}-player game")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("expected a 2x2 game")]
    WrongShape,
    #[error("game has more than {MAX_PROFILES} profiles")]
    TooLarge,
    #[error("invalid game: {0}")]
    InvalidGame(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame<S> {
    strategy_counts: Vec<usize>,
    payoffs: Vec<Vec<S>>,
    labels: Option<Vec<Vec<String>>>,
}

fn profile_count(strategy_counts: &[usize]) -> Result<usize, EquilibriumError> {
    strategy_counts.iter().try_fold(1usize, |acc, &k| {
        acc.checked_mul(k)
            .filter(|n| *n <= MAX_PROFILES)
            .ok_or(EquilibriumError::TooLarge)
    })
}

impl<S: Scalar> NormalFormGame<S> {
    /// Builds a game by evaluating `payoff` on every profile.
    pub fn from_fn(
        strategy_counts: Vec<usize>,
        mut payoff: impl FnMut(&StrategyProfile) -> Vec<S>,
    ) -> Result<Self, EquilibriumError> {
        Self::check_shape(&strategy_counts)?;
        let n = profile_count(&strategy_counts)?;
        let players = strategy_counts.len();
        let mut payoffs = Vec::with_capacity(n);
        for idx in 0..n {
            let profile = decode(&strategy_counts, idx);
            let row = payoff(&profile);
            if row.len() != players {
                return Err(EquilibriumError::InvalidGame(format!(
                    "profile {:?} has {} payoffs, expected {players}",
                    profile.0,
                    row.len()
                )));
            }
            payoffs.push(row);
        }
        Ok(Self { strategy_counts, payoffs, labels: None })
    }

    /// Builds a game from an explicit table; every profile must appear exactly once.
    pub fn from_table(
        strategy_counts: Vec<usize>,
        entries: impl IntoIterator<Item = (Vec<usize>, Vec<S>)>,
    ) -> Result<Self, EquilibriumError> {
        Self::check_shape(&strategy_counts)?;
        let n = profile_count(&strategy_counts)?;
        let players = strategy_counts.len();
        let mut slots: Vec<Option<Vec<S>>> = vec![None; n];
        for (profile, values) in entries {
            if profile.len() != players
                || profile.iter().zip(&strategy_counts).any(|(s, k)| s >= k)
            {
                return Err(EquilibriumError::InvalidGame(format!(
                    "profile {profile:?} is not a valid strategy profile"
                )));
            }
            if values.len() != players {
                return Err(EquilibriumError::InvalidGame(format!(
                    "profile {profile:?} has {} payoffs, expected {players}",
                    values.len()
                )));
            }
            let idx = encode(&strategy_counts, &profile);
            if slots[idx].replace(values).is_some() {
                return Err(EquilibriumError::InvalidGame(format!(
                    "profile {profile:?} listed twice"
                )));
            }
        }
        let payoffs = slots
            .into_iter()
            .enumerate()
            .map(|(idx, slot)| {
                slot.ok_or_else(|| {
                    EquilibriumError::InvalidGame(format!(
                        "missing payoffs for profile {:?}",
                        decode(&strategy_counts, idx).0
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { strategy_counts, payoffs, labels: None })
    }

    fn check_shape(strategy_counts: &[usize]) -> Result<(), EquilibriumError> {
        if strategy_counts.is_empty() {
            return Err(EquilibriumError::PlayerCountTooSmall { min: 1, got: 0 });
        }
        if strategy_counts.contains(&0) {
            return Err(EquilibriumError::InvalidGame(
                "every player needs at least one strategy".into(),
            ));
        }
        Ok(())
    }

    /// Attaches per-player strategy names.
    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self, EquilibriumError> {
        if labels.len() != self.player_count()
            || labels.iter().zip(&self.strategy_counts).any(|(l, k)| l.len() != *k)
        {
            return Err(EquilibriumError::InvalidGame(
                "labels must name every strategy of every player".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn player_count(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn label(&self, player: usize, strategy: usize) -> String {
        match &self.labels {
            Some(l) => l[player][strategy].clone(),
            None => strategy.to_string(),
        }
    }

    pub fn payoff(&self, profile: &StrategyProfile) -> &[S] {
        &self.payoffs[encode(&self.strategy_counts, &profile.0)]
    }

    pub fn profiles(&self) -> impl Iterator<Item = StrategyProfile> + '_ {
        (0..self.payoffs.len()).map(|idx| decode(&self.strategy_counts, idx))
    }

    /// Multiplies every payoff by `factor`.
    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            strategy_counts: self.strategy_counts.clone(),
            payoffs: self
                .payoffs
                .iter()
                .map(|row| row.iter().map(|x| x.clone() * factor.clone()).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }

    fn deviation_payoff(&self, profile: &StrategyProfile, player: usize, strategy: usize) -> &S {
        let mut alt = profile.0.clone();
        alt[player] = strategy;
        &self.payoffs[encode(&self.strategy_counts, &alt)][player]
    }
}

fn encode(strategy_counts: &[usize], profile: &[usize]) -> usize {
    profile
        .iter()
        .zip(strategy_counts)
        .fold(0, |acc, (s, k)| acc * k + s)
}

fn decode(strategy_counts: &[usize], mut idx: usize) -> StrategyProfile {
    let mut choices = vec![0; strategy_counts.len()];
    for (slot, k) in choices.iter_mut().zip(strategy_counts).rev() {
        *slot = idx % k;
        idx /= k;
    }
    StrategyProfile(choices)
}

/// Symmetric n-player team accuracy game. Strategy 0 is `Cooperate`, 1 is `Defect`.
pub fn build_stag_game<S: Scalar>(
    n: usize,
    cfg: &PayoffConfig,
) -> Result<NormalFormGame<S>, EquilibriumError> {
    if n < 2 {
        return Err(EquilibriumError::PlayerCountTooSmall { min: 2, got: n });
    }
    let game = NormalFormGame::from_fn(vec![2; n], |profile| {
        let choices: Vec<Choice> = profile
            .0
            .iter()
            .map(|&s| if s == 0 { Choice::Cooperate } else { Choice::Defect })
            .collect();
        stag_payoffs(&choices, cfg)
            .expect("n >= 2")
            .into_iter()
            .map(S::from_i64)
            .collect()
    })?;
    game.with_labels(vec![vec!["Cooperate".into(), "Defect".into()]; n])
}

/// Profiles where no player can strictly gain by deviating alone.
pub fn find_pure_nash<S: Scalar>(game: &NormalFormGame<S>) -> Vec<StrategyProfile> {
    game.profiles()
        .filter(|profile| {
            let current = game.payoff(profile);
            (0..game.player_count()).all(|player| {
                (0..game.strategy_counts[player]).all(|alt| {
                    !definitely_gt(game.deviation_payoff(profile, player, alt), &current[player])
                })
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceKind {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    pub strategy: usize,
    pub kind: DominanceKind,
}

/// A strategy of `player` that dominates every other strategy of theirs.
///
/// Strict beats each alternative against every opponent profile. Weak is
/// never worse and, against each alternative, better somewhere.
pub fn find_dominant<S: Scalar>(
    game: &NormalFormGame<S>,
    player: usize,
) -> Result<Option<Dominance>, EquilibriumError> {
    let players = game.player_count();
    if player >= players {
        return Err(EquilibriumError::PlayerOutOfRange { player, players });
    }
    let k = game.strategy_counts[player];
    if k == 1 {
        return Ok(None);
    }
    // opponent contexts: all profiles with the player's own digit fixed at 0
    let contexts: Vec<StrategyProfile> = game.profiles().filter(|p| p.0[player] == 0).collect();
    let mut weak = None;
    for candidate in 0..k {
        let mut strict = true;
        let mut dominates = true;
        for other in (0..k).filter(|&o| o != candidate) {
            let mut better_somewhere = false;
            for ctx in &contexts {
                let mine = game.deviation_payoff(ctx, player, candidate);
                let theirs = game.deviation_payoff(ctx, player, other);
                if definitely_gt(mine, theirs) {
                    better_somewhere = true;
                } else {
                    strict = false;
                    if definitely_gt(theirs, mine) {
                        dominates = false;
                    }
                }
            }
            if !better_somewhere {
                dominates = false;
            }
        }
        if strict {
            return Ok(Some(Dominance { strategy: candidate, kind: DominanceKind::Strict }));
        }
        if dominates && weak.is_none() {
            weak = Some(Dominance { strategy: candidate, kind: DominanceKind::Weak });
        }
    }
    Ok(weak)
}

/// Mixing probabilities of a fully mixed 2x2 equilibrium.
///
/// `row_first` is the probability the row player puts on strategy 0, chosen
/// to make the column player indifferent; `column_first` likewise.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPair<S> {
    pub row_first: S,
    pub column_first: S,
}

/// Solves the indifference conditions of a 2x2 game. Returns `None` unless
/// both probabilities lie strictly inside (0, 1); a degenerate game where
/// indifference holds identically also yields `None`.
pub fn solve_mixed_2x2<S: Scalar>(
    game: &NormalFormGame<S>,
) -> Result<Option<MixedPair<S>>, EquilibriumError> {
    if game.strategy_counts != [2, 2] {
        return Err(EquilibriumError::WrongShape);
    }
    let cell = |r: usize, c: usize, player: usize| {
        game.payoff(&StrategyProfile(vec![r, c]))[player].clone()
    };
    let (a00, a01, a10, a11) = (cell(0, 0, 0), cell(0, 1, 0), cell(1, 0, 0), cell(1, 1, 0));
    let (b00, b01, b10, b11) = (cell(0, 0, 1), cell(0, 1, 1), cell(1, 0, 1), cell(1, 1, 1));

    // column mix q makes the row player indifferent:
    //   q*a00 + (1-q)*a01 = q*a10 + (1-q)*a11
    let q_den = a00 - a01.clone() - a10 + a11.clone();
    // row mix p makes the column player indifferent:
    //   p*b00 + (1-p)*b10 = p*b01 + (1-p)*b11
    let p_den = b00 - b10.clone() - b01 + b11.clone();
    if approx_eq(&q_den, &S::zero()) || approx_eq(&p_den, &S::zero()) {
        return Ok(None);
    }
    let q = (a11 - a01) / q_den;
    let p = (b11 - b10) / p_den;
    let interior = |x: &S| definitely_gt(x, &S::zero()) && definitely_gt(&S::one(), x);
    if interior(&p) && interior(&q) {
        Ok(Some(MixedPair { row_first: p, column_first: q }))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<S> {
    pub pure_nash: Vec<StrategyProfile>,
    pub dominant_strategies: Vec<Option<Dominance>>,
    pub mixed_2x2: Option<MixedPair<S>>,
}

pub fn analyze<S: Scalar>(game: &NormalFormGame<S>) -> EquilibriumReport<S> {
    let dominant_strategies = (0..game.player_count())
        .map(|p| find_dominant(game, p).expect("player index in range"))
        .collect();
    let mixed_2x2 = match solve_mixed_2x2(game) {
        Ok(m) => m,
        Err(_) => None,
    };
    EquilibriumReport { pure_nash: find_pure_nash(game), dominant_strategies, mixed_2x2 }
}

impl<S: Scalar> EquilibriumReport<S> {
    /// JSON document with both strategy indices and strategy labels.
    pub fn to_json(&self, game: &NormalFormGame<S>) -> Value {
        let pure_nash: Vec<Value> = self
            .pure_nash
            .iter()
            .map(|p| {
                let labels: Vec<String> =
                    p.0.iter().enumerate().map(|(pl, &s)| game.label(pl, s)).collect();
                serde_json::json!({ "profile": p.0, "labels": labels })
            })
            .collect();
        let dominant: Vec<Value> = self
            .dominant_strategies
            .iter()
            .enumerate()
            .map(|(player, d)| match d {
                Some(d) => serde_json::json!({
                    "player": player,
                    "strategy": d.strategy,
                    "label": game.label(player, d.strategy),
                    "kind": d.kind,
                }),
                None => serde_json::json!({ "player": player, "strategy": null }),
            })
            .collect();
        let mixed = match &self.mixed_2x2 {
            Some(m) => serde_json::json!({
                "row_first": m.row_first.to_json(),
                "column_first": m.column_first.to_json(),
            }),
            None => Value::Null,
        };
        serde_json::json!({
            "player_count": game.player_count(),
            "strategy_counts": game.strategy_counts(),
            "pure_nash": pure_nash,
            "dominant_strategies": dominant,
            "mixed_2x2": mixed,
        })
    }
}

/// JSON game description accepted by the `analyze` command.
///
/// ```json
/// { "player_count": 2, "strategy_counts": [2, 2],
///   "payoffs": [ { "profile": [0, 0], "values": [3, 3] }, ... ],
///   "labels": [["C", "D"], ["C", "D"]] }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub player_count: usize,
    pub strategy_counts: Vec<usize>,
    pub payoffs: Vec<PayoffEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffEntry {
    pub profile: Vec<usize>,
    pub values: Vec<Value>,
}

impl GameDocument {
    pub fn into_game(self) -> Result<NormalFormGame<Rational>, EquilibriumError> {
        if self.player_count != self.strategy_counts.len() {
            return Err(EquilibriumError::InvalidGame(format!(
                "player_count {} does not match {} strategy counts",
                self.player_count,
                self.strategy_counts.len()
            )));
        }
        let entries = self
            .payoffs
            .into_iter()
            .map(|e| {
                let values = e
                    .values
                    .iter()
                    .map(Rational::from_json)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|err| EquilibriumError::InvalidGame(err.to_string()))?;
                Ok((e.profile, values))
            })
            .collect::<Result<Vec<_>, EquilibriumError>>()?;
        let game = NormalFormGame::from_table(self.strategy_counts, entries)?;
        match self.labels {
            Some(l) => game.with_labels(l),
            None => Ok(game),
        }
    }
}
