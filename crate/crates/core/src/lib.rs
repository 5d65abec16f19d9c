//! Simulation engine for populations of individual and social learners on
//! non-stationary multi-armed bandits.
//!
//! The crate models three base strategies (epsilon-greedy individual
//! learning, success-based copying and conformist copying), an order-statistic
//! uncertainty measure over the arm reward distributions, context detectors
//! built from population-level social information, and thirteen meta-level
//! controllers that arbitrate between the base strategies. Population change
//! is simulated both with a replicator-mutator ODE and with an agent-based
//! evolutionary loop, and controllers can be trained offline with a genetic
//! algorithm or differential evolution.

pub mod config;
pub mod context;
pub mod env;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod learning;
pub mod meta;
pub mod odpu;
pub mod optimizers;
pub mod replicator;
pub mod rng;

pub use context::{Context, ContextParams, ContextRaw, ContextTracker};
pub use env::{EnvChangeLog, EnvironmentSchedule, RewardModel};
pub use error::{Error, Result};
pub use evolution::{Agent, Population, RunResult, SimParams, SlsChoice};
pub use learning::{QTable, SocialHistory, SocialInfo};
pub use meta::{ControllerAssets, FcnWeights, MetaKind, RuleTable, StrategyKind};
pub use odpu::GroupSpec;
