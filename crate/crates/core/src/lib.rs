//! Story-point estimation games: second-highest sealed-bid commitment with
//! accuracy-band payoffs, a team accuracy payoff matrix, equilibrium
//! analysis, live session state, reports, and an agent-based simulator.

pub mod equilibrium;
pub mod games;
pub mod ledger;
pub mod scalar;
pub mod session;
pub mod simulator;

pub use scalar::{Rational, Scalar};

pub type Scale = games::EstimationScale<Rational>;
pub type Points = games::ScaleValue<Rational>;
pub type Effort = games::ActualEffort<Rational>;
pub type Game = equilibrium::NormalFormGame<Rational>;
