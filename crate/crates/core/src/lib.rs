//! Semiparametric contextual bandits.
//!
//! Rewards are linear in the chosen arm's context plus an arbitrary
//! confounding term shared by all arms in a round. [`gbose::Gbose`] learns
//! the linear part from centered contexts so the confounder cancels; the
//! [`baselines`] module holds three Thompson-sampling policies for
//! comparison, [`envs`] the simulated environments and [`harness`] the
//! experiment runner behind the `semibandit` binary.

pub mod bandit;
pub mod baselines;
pub mod envs;
pub mod error;
pub mod gbose;
pub mod harness;
pub mod linalg;

pub use bandit::{Decision, Feedback, Policy, RoundContext, SimRng};
pub use baselines::{ActionCenteredTs, LinTs, SemiTs, TsConfig};
pub use envs::{Confounder, ContextMode, Environment, EnvironmentSpec};
pub use error::{Error, Result};
pub use gbose::{EstimatorState, Gbose, GboseConfig};
