//! Selection and payoff rules for the two estimation games.
//!
//! The second-highest-bid game commits the second-highest sealed estimate
//! and scores each bid against the actual effort in three accuracy bands.
//! The team accuracy game pays every developer according to their own
//! choice (accurate or not) and whether anyone else defected.
//!
//! Everything here is pure and generic over [`Scalar`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::scalar::{approx_eq, approx_le, serde_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("estimate set is empty")]
    EmptyEstimateSet,
    #[error("choice list is empty")]
    EmptyChoiceList,
    #[error("actual effort must be positive, got {0}")]
    NonPositiveActual(String),
    #[error("{0} is not on the estimation scale")]
    ValueNotOnScale(String),
    #[error("invalid scale: {0}")]
    InvalidScale(&'static str),
    #[error("invalid payoff configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Ordered set of allowed story-point values.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationScale<S> {
    values: Vec<S>,
}

impl<S: Scalar> EstimationScale<S> {
    pub fn new(values: Vec<S>) -> Result<Self, GameError> {
        if values.is_empty() {
            return Err(GameError::InvalidScale("scale must not be empty"));
        }
        if !values.iter().all(|v| *v > S::zero()) {
            return Err(GameError::InvalidScale("scale values must be positive"));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(GameError::InvalidScale("scale values must be strictly increasing"));
        }
        Ok(Self { values })
    }

    /// Modified Fibonacci: 1, 2, 3, 5, 8, 13, 21.
    pub fn fibonacci() -> Self {
        Self {
            values: [1, 2, 3, 5, 8, 13, 21].into_iter().map(S::from_i64).collect(),
        }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn contains(&self, value: &S) -> bool {
        self.values.iter().any(|v| approx_eq(v, value))
    }

    /// Wraps `value` as a member of this scale.
    pub fn value(&self, value: S) -> Result<ScaleValue<S>, GameError> {
        match self.values.iter().find(|v| approx_eq(*v, &value)) {
            Some(v) => Ok(ScaleValue(v.clone())),
            None => Err(GameError::ValueNotOnScale(value.to_string())),
        }
    }

    /// Scale value closest to `x`; ties go to the smaller value.
    pub fn nearest(&self, x: &S) -> ScaleValue<S> {
        let mut best = &self.values[0];
        let mut best_dist = (best.clone() - x.clone()).abs();
        for v in &self.values[1..] {
            let dist = (v.clone() - x.clone()).abs();
            // strictly closer only; values ascend, so equal distance keeps the smaller
            if dist < best_dist && !approx_eq(&dist, &best_dist) {
                best = v;
                best_dist = dist;
            }
        }
        ScaleValue(best.clone())
    }

    /// Converts every value to another scalar type, e.g. exact rationals to `f64`
    /// for the simulator.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<EstimationScale<T>, GameError> {
        EstimationScale::new(self.values.iter().map(f).collect())
    }
}

impl<S: Scalar> Default for EstimationScale<S> {
    fn default() -> Self {
        Self::fibonacci()
    }
}

impl<S: Scalar> Serialize for EstimationScale<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        Value::Array(self.values.iter().map(Scalar::to_json).collect()).serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for EstimationScale<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<Value>::deserialize(d)?;
        let values = raw
            .iter()
            .map(S::from_json)
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Self::new(values).map_err(serde::de::Error::custom)
    }
}

/// A story-point value known to lie on some [`EstimationScale`].
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct ScaleValue<S>(S);

impl<S: Scalar> ScaleValue<S> {
    pub fn get(&self) -> &S {
        &self.0
    }

    pub fn into_inner(self) -> S {
        self.0
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl<S: Scalar> fmt::Display for ScaleValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl<S: Scalar> Serialize for ScaleValue<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        self.0.to_json().serialize(s)
    }
}

// Deserialization only checks positivity; scale membership is re-checked by
// whoever owns the scale.
impl<'de, S: Scalar> Deserialize<'de> for ScaleValue<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let x = S::from_json(&v).map_err(serde::de::Error::custom)?;
        if x <= S::zero() {
            return Err(serde::de::Error::custom("scale value must be positive"));
        }
        Ok(ScaleValue(x))
    }
}

/// Measured effort, in story points. Need not lie on the scale.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct ActualEffort<S>(S);

impl<S: Scalar> ActualEffort<S> {
    pub fn new(value: S) -> Result<Self, GameError> {
        if value > S::zero() {
            Ok(Self(value))
        } else {
            Err(GameError::NonPositiveActual(value.to_string()))
        }
    }

    pub fn get(&self) -> &S {
        &self.0
    }
}

impl<S: Scalar> Serialize for ActualEffort<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        self.0.to_json().serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for ActualEffort<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let x = S::from_json(&v).map_err(serde::de::Error::custom)?;
        Self::new(x).map_err(serde::de::Error::custom)
    }
}

/// Scoring constants for both games.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayoffConfig {
    pub exact_points: i64,
    pub band_points: i64,
    pub miss_points: i64,
    #[serde(with = "serde_rational")]
    pub band: Rational,
    pub stag_all_cooperate: i64,
    pub stag_cooperate_with_defectors: i64,
    pub stag_unilateral_defect: i64,
    pub stag_defect_with_defectors: i64,
    pub adaptability_bonus: i64,
    pub contribution_point: i64,
}

impl Default for PayoffConfig {
    fn default() -> Self {
        Self {
            exact_points: 5,
            band_points: 3,
            miss_points: 0,
            band: Rational::new(1, 10),
            stag_all_cooperate: 5,
            stag_cooperate_with_defectors: 2,
            stag_unilateral_defect: 3,
            stag_defect_with_defectors: 0,
            adaptability_bonus: 1,
            contribution_point: 1,
        }
    }
}

impl PayoffConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.exact_points >= self.band_points && self.band_points >= self.miss_points) {
            return Err(GameError::InvalidConfig(
                "need exact_points >= band_points >= miss_points",
            ));
        }
        if self.stag_all_cooperate <= self.stag_unilateral_defect {
            return Err(GameError::InvalidConfig(
                "need stag_all_cooperate > stag_unilateral_defect",
            ));
        }
        if !(self.band > Rational::from_integer(0) && self.band < Rational::from_integer(1)) {
            return Err(GameError::InvalidConfig("band must lie strictly between 0 and 1"));
        }
        Ok(())
    }

    pub fn band_as<S: Scalar>(&self) -> S {
        S::from_rational(&self.band)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Cooperate,
    Defect,
}

/// Ordered by distance from the actual effort: `Exact < WithinBand < Miss`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyBand {
    Exact,
    WithinBand,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    Median,
    Max,
}

/// Second-highest bid of the multiset; duplicates count as separate bids.
/// A single bid is returned as is.
pub fn vickrey_select<S: Scalar>(estimates: &[ScaleValue<S>]) -> Result<ScaleValue<S>, GameError> {
    match estimates {
        [] => return Err(GameError::EmptyEstimateSet),
        [only] => return Ok(only.clone()),
        _ => {}
    }
    let top = (0..estimates.len())
        .max_by(|&a, &b| estimates[a].total_cmp(&estimates[b]))
        .unwrap();
    let second = estimates
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != top)
        .map(|(_, v)| v)
        .max_by(|a, b| a.total_cmp(b))
        .unwrap();
    Ok(second.clone())
}

/// Relative deviation `|estimate - actual| / actual`.
pub fn relative_deviation<S: Scalar>(estimate: &S, actual: &ActualEffort<S>) -> S {
    (estimate.clone() - actual.0.clone()).abs() / actual.0.clone()
}

fn within_band<S: Scalar>(estimate: &S, actual: &ActualEffort<S>, cfg: &PayoffConfig) -> bool {
    approx_le(&relative_deviation(estimate, actual), &cfg.band_as::<S>())
}

/// `Exact` when the estimate equals the actual effort, `WithinBand` when the
/// relative deviation is inside the configured band, `Miss` otherwise.
pub fn classify_accuracy<S: Scalar>(
    estimate: &ScaleValue<S>,
    actual: &ActualEffort<S>,
    cfg: &PayoffConfig,
) -> AccuracyBand {
    if approx_eq(&estimate.0, &actual.0) {
        AccuracyBand::Exact
    } else if within_band(&estimate.0, actual, cfg) {
        AccuracyBand::WithinBand
    } else {
        AccuracyBand::Miss
    }
}

pub fn vickrey_payoff(band: AccuracyBand, cfg: &PayoffConfig) -> i64 {
    match band {
        AccuracyBand::Exact => cfg.exact_points,
        AccuracyBand::WithinBand => cfg.band_points,
        AccuracyBand::Miss => cfg.miss_points,
    }
}

/// Accurate (within the band) counts as cooperation.
pub fn classify_choice<S: Scalar>(
    estimate: &ScaleValue<S>,
    actual: &ActualEffort<S>,
    cfg: &PayoffConfig,
) -> Choice {
    if within_band(&estimate.0, actual, cfg) {
        Choice::Cooperate
    } else {
        Choice::Defect
    }
}

/// Team accuracy payoffs, aligned with `choices`.
///
/// A defector is paid the unilateral-defection amount when every *other*
/// player cooperated; with one player that holds vacuously.
pub fn stag_payoffs(choices: &[Choice], cfg: &PayoffConfig) -> Result<Vec<i64>, GameError> {
    if choices.is_empty() {
        return Err(GameError::EmptyChoiceList);
    }
    let defectors = choices.iter().filter(|c| **c == Choice::Defect).count();
    Ok(choices
        .iter()
        .map(|c| match c {
            Choice::Cooperate if defectors == 0 => cfg.stag_all_cooperate,
            Choice::Cooperate => cfg.stag_cooperate_with_defectors,
            Choice::Defect if defectors == 1 => cfg.stag_unilateral_defect,
            Choice::Defect => cfg.stag_defect_with_defectors,
        })
        .collect())
}

/// Mean, lower median, or maximum of the estimates.
pub fn baseline_aggregate<S: Scalar>(
    estimates: &[ScaleValue<S>],
    kind: Aggregate,
) -> Result<S, GameError> {
    if estimates.is_empty() {
        return Err(GameError::EmptyEstimateSet);
    }
    Ok(match kind {
        Aggregate::Mean => {
            let sum = estimates.iter().fold(S::zero(), |acc, v| acc + v.0.clone());
            sum / S::from_i64(estimates.len() as i64)
        }
        Aggregate::Median => {
            let mut sorted: Vec<&ScaleValue<S>> = estimates.iter().collect();
            sorted.sort_by(|a, b| a.total_cmp(b));
            sorted[(sorted.len() - 1) / 2].0.clone()
        }
        Aggregate::Max => estimates
            .iter()
            .max_by(|a, b| a.total_cmp(b))
            .unwrap()
            .0
            .clone(),
    })
}
