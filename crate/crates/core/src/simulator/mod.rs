//! Agent-based Monte Carlo runs of the estimation games.
//!
//! Each story draws a true effort from a log-normal distribution; every agent
//! forms a noisy belief, applies its strategy and snaps to the scale. The
//! configured mechanism picks the committed estimate, and every agent is paid
//! on its own bid with the accuracy-band and team accuracy rules.
//!
//! Scoring runs on the `f64` instantiation of the payoff rules (absolute
//! tolerance 1e-9 at band boundaries).

pub mod rng;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::games::{
    baseline_aggregate, classify_accuracy, classify_choice, stag_payoffs, vickrey_payoff,
    vickrey_select, ActualEffort, Aggregate, Choice, EstimationScale, GameError, PayoffConfig,
    ScaleValue,
};
use crate::scalar::Scalar;
use crate::Scale;
use rng::{stream, Domain, DrawChecksum};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("true effort must be positive, got {0}")]
    NonPositiveEffort(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    Honest,
    Inflate { factor: f64 },
    Deflate { factor: f64 },
    Learner { initial_sigma: f64, decay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub strategy: Strategy,
    /// Standard deviation of the multiplicative log-space estimation error.
    #[serde(default)]
    pub noise_sigma: f64,
}

impl AgentSpec {
    pub fn new(name: impl Into<String>, strategy: Strategy, noise_sigma: f64) -> Self {
        Self { name: name.into(), strategy, noise_sigma }
    }

    pub fn honest(name: impl Into<String>, noise_sigma: f64) -> Self {
        Self::new(name, Strategy::Honest, noise_sigma)
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |why: &str| Err(SimError::InvalidConfig(format!("agent {}: {why}", self.name)));
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be a finite non-negative number");
        }
        match self.strategy {
            Strategy::Honest => Ok(()),
            Strategy::Inflate { factor } if factor > 1.0 && factor.is_finite() => Ok(()),
            Strategy::Inflate { .. } => bad("inflate factor must be > 1"),
            Strategy::Deflate { factor } if factor > 0.0 && factor < 1.0 => Ok(()),
            Strategy::Deflate { .. } => bad("deflate factor must lie in (0, 1)"),
            Strategy::Learner { initial_sigma, decay }
                if initial_sigma >= 0.0 && initial_sigma.is_finite() && decay > 0.0 && decay < 1.0 =>
            {
                Ok(())
            }
            Strategy::Learner { .. } => bad("learner needs initial_sigma >= 0 and decay in (0, 1)"),
        }
    }

    fn initial_sigma(&self) -> f64 {
        match self.strategy {
            Strategy::Learner { initial_sigma, .. } => initial_sigma,
            _ => self.noise_sigma,
        }
    }

    fn bias(&self) -> f64 {
        match self.strategy {
            Strategy::Inflate { factor } | Strategy::Deflate { factor } => factor,
            _ => 1.0,
        }
    }
}

/// Draws one estimate for `true_effort` using the agent's starting noise level.
pub fn agent_estimate(
    agent: &AgentSpec,
    true_effort: f64,
    scale: &EstimationScale<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<ScaleValue<f64>, SimError> {
    let z: f64 = rng.sample(StandardNormal);
    estimate_from_draw(agent, agent.initial_sigma(), true_effort, z, scale)
}

fn estimate_from_draw(
    agent: &AgentSpec,
    sigma: f64,
    true_effort: f64,
    z: f64,
    scale: &EstimationScale<f64>,
) -> Result<ScaleValue<f64>, SimError> {
    if !(true_effort > 0.0) {
        return Err(SimError::NonPositiveEffort(true_effort));
    }
    let belief = true_effort * (sigma * z).exp();
    Ok(scale.nearest(&(belief * agent.bias())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalEffort {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for LogNormalEffort {
    /// Median effort 5 points, spread wide enough to cover most of the
    /// Fibonacci scale.
    fn default() -> Self {
        Self { mu: 5f64.ln(), sigma: 0.6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    SecondHighest,
    Mean,
    Median,
    Max,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] =
        [Mechanism::SecondHighest, Mechanism::Mean, Mechanism::Median, Mechanism::Max];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::SecondHighest => "second_highest",
            Mechanism::Mean => "mean",
            Mechanism::Median => "median",
            Mechanism::Max => "max",
        }
    }

    pub fn commit<S: Scalar>(self, estimates: &[ScaleValue<S>]) -> Result<S, GameError> {
        match self {
            Mechanism::SecondHighest => vickrey_select(estimates).map(ScaleValue::into_inner),
            Mechanism::Mean => baseline_aggregate(estimates, Aggregate::Mean),
            Mechanism::Median => baseline_aggregate(estimates, Aggregate::Median),
            Mechanism::Max => baseline_aggregate(estimates, Aggregate::Max),
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SimError::InvalidConfig(format!("unknown mechanism {s:?}")))
    }
}

impl Default for Mechanism {
    fn default() -> Self {
        Mechanism::SecondHighest
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub agents: Vec<AgentSpec>,
    /// Stories per sprint.
    pub stories: u32,
    pub sprints: u32,
    #[serde(default)]
    pub effort_distribution: LogNormalEffort,
    #[serde(default)]
    pub mechanism: Mechanism,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub payoff: PayoffConfig,
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u32,
}

impl SimulationConfig {
    pub fn new(agents: Vec<AgentSpec>, stories: u32, sprints: u32, seed: u64) -> Self {
        Self {
            agents,
            stories,
            sprints,
            effort_distribution: LogNormalEffort::default(),
            mechanism: Mechanism::default(),
            scale: Scale::default(),
            payoff: PayoffConfig::default(),
            seed,
            replications: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |why: &str| Err(SimError::InvalidConfig(why.to_string()));
        if self.agents.is_empty() {
            return bad("at least one agent is required");
        }
        if self.stories == 0 || self.sprints == 0 || self.replications == 0 {
            return bad("stories, sprints and replications must be positive");
        }
        let d = self.effort_distribution;
        if !(d.mu.is_finite() && d.sigma.is_finite() && d.sigma >= 0.0) {
            return bad("effort distribution needs finite mu and sigma >= 0");
        }
        self.payoff.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        for a in &self.agents {
            a.validate()?;
        }
        Ok(())
    }

    fn float_scale(&self) -> EstimationScale<f64> {
        self.scale.convert(Scalar::to_f64).expect("a valid rational scale stays valid as f64")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub name: String,
    pub strategy: Strategy,
    pub mean_points_per_story: f64,
    pub mean_accuracy_points: f64,
    pub cooperation_rate: f64,
    /// Noise level in force during each sprint (learners only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma_by_sprint: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismMetrics {
    pub mechanism: Mechanism,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintVelocity {
    pub sprint: u32,
    pub completed_points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub replications: u32,
    pub mechanism: Mechanism,
    pub stories_per_sprint: u32,
    pub sprints: u32,
    pub agents: Vec<AgentMetrics>,
    /// MAPE of every commit rule over the same estimates; the configured
    /// mechanism's entry is the one that drives velocity.
    pub mechanisms: Vec<MechanismMetrics>,
    /// Mean committed points per sprint across replications.
    pub velocity: Vec<SprintVelocity>,
    pub draw_checksum: String,
}

impl MetricsReport {
    pub fn mape(&self, mechanism: Mechanism) -> f64 {
        self.mechanisms
            .iter()
            .find(|m| m.mechanism == mechanism)
            .map(|m| m.mape)
            .expect("every mechanism is reported")
    }

    pub fn agent(&self, name: &str) -> Option<&AgentMetrics> {
        self.agents.iter().find(|a| a.name == name)
    }
}

/// One simulated story, for offline re-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub replication: u32,
    pub sprint: u32,
    pub story: u32,
    pub actual: f64,
    pub estimates: Vec<f64>,
    pub final_estimate: f64,
    pub choices: Vec<Choice>,
    pub accuracy_points: Vec<i64>,
    pub stag_points: Vec<i64>,
    pub contribution_points: Vec<i64>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    points: Vec<i64>,
    accuracy: Vec<i64>,
    cooperations: Vec<u64>,
    sigma_by_sprint: Vec<Vec<f64>>,
    abs_pct_error: [f64; 4],
    velocity: Vec<f64>,
    checksum: DrawChecksum,
}

fn run_replication(
    cfg: &SimulationConfig,
    scale: &EstimationScale<f64>,
    replication: u32,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Tally {
    let n = cfg.agents.len();
    let mut effort_rng = stream(cfg.seed, replication, Domain::Effort, 0);
    let mut noise_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| stream(cfg.seed, replication, Domain::AgentNoise, i as u64))
        .collect();
    let mut sigmas: Vec<f64> = cfg.agents.iter().map(AgentSpec::initial_sigma).collect();
    let mut tally = Tally {
        points: vec![0; n],
        accuracy: vec![0; n],
        cooperations: vec![0; n],
        sigma_by_sprint: vec![Vec::new(); n],
        ..Default::default()
    };
    let dist = cfg.effort_distribution;
    let payoff = &cfg.payoff;

    for sprint in 1..=cfg.sprints {
        for (i, s) in sigmas.iter().enumerate() {
            tally.sigma_by_sprint[i].push(*s);
        }
        let mut sprint_points = 0.0;
        for story in 0..cfg.stories {
            let z_effort: f64 = effort_rng.sample(StandardNormal);
            tally.checksum.add(z_effort);
            let effort = (dist.mu + dist.sigma * z_effort).exp();
            let actual = ActualEffort::new(effort).expect("exp is positive");

            let estimates: Vec<ScaleValue<f64>> = cfg
                .agents
                .iter()
                .zip(&mut noise_rngs)
                .zip(&sigmas)
                .map(|((agent, rng), sigma)| {
                    let z: f64 = rng.sample(StandardNormal);
                    tally.checksum.add(z);
                    estimate_from_draw(agent, *sigma, effort, z, scale).expect("positive effort")
                })
                .collect();

            for (slot, m) in tally.abs_pct_error.iter_mut().zip(Mechanism::ALL) {
                let committed = m.commit(&estimates).expect("at least one agent");
                *slot += (committed - effort).abs() / effort;
            }
            let final_estimate = cfg.mechanism.commit(&estimates).expect("at least one agent");
            sprint_points += final_estimate;

            let choices: Vec<Choice> =
                estimates.iter().map(|e| classify_choice(e, &actual, payoff)).collect();
            let stag = stag_payoffs(&choices, payoff).expect("at least one agent");
            let accuracy: Vec<i64> = estimates
                .iter()
                .map(|e| vickrey_payoff(classify_accuracy(e, &actual, payoff), payoff))
                .collect();
            for i in 0..n {
                tally.points[i] += accuracy[i] + stag[i] + payoff.contribution_point;
                tally.accuracy[i] += accuracy[i];
                tally.cooperations[i] += u64::from(choices[i] == Choice::Cooperate);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceRecord {
                    replication,
                    sprint,
                    story,
                    actual: effort,
                    estimates: estimates.iter().map(|e| *e.get()).collect(),
                    final_estimate,
                    choices,
                    accuracy_points: accuracy,
                    stag_points: stag,
                    contribution_points: vec![payoff.contribution_point; n],
                });
            }
        }
        tally.velocity.push(sprint_points);
        for (agent, sigma) in cfg.agents.iter().zip(&mut sigmas) {
            if let Strategy::Learner { decay, .. } = agent.strategy {
                *sigma *= decay;
            }
        }
    }
    tally
}

fn simulate(cfg: &SimulationConfig, mut trace: Option<&mut Vec<TraceRecord>>) -> Result<MetricsReport, SimError> {
    cfg.validate()?;
    let scale = cfg.float_scale();
    let tallies: Vec<Tally> = match trace.as_deref_mut() {
        // tracing is sequential so records come out in replication order
        Some(t) => (0..cfg.replications).map(|r| run_replication(cfg, &scale, r, Some(t))).collect(),
        None => (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(cfg, &scale, r, None))
            .collect(),
    };

    let n = cfg.agents.len();
    let reps = f64::from(cfg.replications);
    let stories_per_rep = f64::from(cfg.stories) * f64::from(cfg.sprints);
    let total_stories = stories_per_rep * reps;
    let mut checksum = DrawChecksum::default();
    for t in &tallies {
        checksum.merge(t.checksum);
    }

    let agents = (0..n)
        .map(|i| {
            let spec = &cfg.agents[i];
            let points: i64 = tallies.iter().map(|t| t.points[i]).sum();
            let accuracy: i64 = tallies.iter().map(|t| t.accuracy[i]).sum();
            let coop: u64 = tallies.iter().map(|t| t.cooperations[i]).sum();
            let sigma_by_sprint = match spec.strategy {
                Strategy::Learner { .. } => tallies[0].sigma_by_sprint[i].clone(),
                _ => Vec::new(),
            };
            AgentMetrics {
                name: spec.name.clone(),
                strategy: spec.strategy,
                mean_points_per_story: points as f64 / total_stories,
                mean_accuracy_points: accuracy as f64 / total_stories,
                cooperation_rate: coop as f64 / total_stories,
                sigma_by_sprint,
            }
        })
        .collect();

    let mechanisms = Mechanism::ALL
        .iter()
        .enumerate()
        .map(|(k, &mechanism)| MechanismMetrics {
            mechanism,
            mape: tallies.iter().map(|t| t.abs_pct_error[k]).sum::<f64>() / total_stories,
        })
        .collect();

    let velocity = (0..cfg.sprints as usize)
        .map(|s| SprintVelocity {
            sprint: s as u32 + 1,
            completed_points: tallies.iter().map(|t| t.velocity[s]).sum::<f64>() / reps,
        })
        .collect();

    Ok(MetricsReport {
        seed: cfg.seed,
        replications: cfg.replications,
        mechanism: cfg.mechanism,
        stories_per_sprint: cfg.stories,
        sprints: cfg.sprints,
        agents,
        mechanisms,
        velocity,
        draw_checksum: checksum.hex(),
    })
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<MetricsReport, SimError> {
    simulate(cfg, None)
}

/// Like [`run_simulation`] but also returns one record per simulated story.
pub fn run_simulation_traced(
    cfg: &SimulationConfig,
) -> Result<(MetricsReport, Vec<TraceRecord>), SimError> {
    let mut trace = Vec::new();
    let report = simulate(cfg, Some(&mut trace))?;
    Ok((report, trace))
}

/// Runs the same population and seed under each mechanism (common random numbers).
pub fn compare_mechanisms(
    cfg: &SimulationConfig,
    mechanisms: &[Mechanism],
) -> Result<Vec<MetricsReport>, SimError> {
    if mechanisms.is_empty() {
        return Err(SimError::InvalidConfig("at least one mechanism is required".into()));
    }
    cfg.validate()?;
    mechanisms
        .par_iter()
        .map(|&mechanism| run_simulation(&SimulationConfig { mechanism, ..cfg.clone() }))
        .collect()
}

pub const CSV_HEADER: &str = "row,mechanism,name,mean_points_per_story,cooperation_rate,mape";

/// One row per agent (for each report's mechanism) and one per mechanism aggregate.
pub fn reports_to_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for a in &r.agents {
            let name = if a.name.contains([',', '"', '\n']) {
                format!("\"{}\"", a.name.replace('"', "\"\""))
            } else {
                a.name.clone()
            };
            out.push_str(&format!(
                "agent,{},{},{},{},\n",
                r.mechanism.name(),
                name,
                a.mean_points_per_story,
                a.cooperation_rate
            ));
        }
        out.push_str(&format!("mechanism,{},,,,{}\n", r.mechanism.name(), r.mape(r.mechanism)));
    }
    out
}

/// One JSON object per line.
pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for t in trace {
        out.push_str(&serde_json::to_string(t).expect("trace serializes"));
        out.push('\n');
    }
    out
}
