//! Agent-based simulation of UCB-guided social tie formation.
//!
//! Agents live on a dynamic, undirected, weighted social graph. Each step an
//! agent either exploits an existing tie or explores a new one; interaction
//! rewards come from latent pairwise distributions, successful interactions
//! strengthen ties and unreinforced ties decay. The Social-UCB learner mixes a
//! UCB exploration branch with greedy tabular Q-learning under a decaying
//! epsilon schedule, and is compared against random-walk, exploit-only and
//! static-arm UCB1 baselines.
//!
//! Module map:
//! - [`graph`]: the weighted social graph, tie reinforcement and decay.
//! - [`reward`]: latent pair reward distributions and the true-mean oracle.
//! - [`learner`]: per-agent beliefs, Q-table, UCB score and update rules.
//! - [`policies`]: action enumeration and the four selection strategies.
//! - [`metrics`]: fitness, oracle regret, network statistics, trial aggregation.
//! - [`engine`]: the step loop, single trials and Monte Carlo experiments.
//! - [`config`] / [`io`]: run configuration and every output file format.

pub mod config;
pub mod engine;
pub mod graph;
pub mod io;
pub mod learner;
pub mod metrics;
pub mod policies;
pub mod reward;
pub mod rng;

pub use config::{parse_config, ConfigError, SimConfig};
pub use engine::{run_experiment, run_step, run_trial, EngineError, TrialOutput, TrialRecord};
pub use graph::{EdgeParams, EdgeState, GraphError, NodeId, SocialGraph};
pub use learner::{ActionKind, AgentLearner, AgentState, LearnerParams, SocialAction};
pub use metrics::{FitnessParams, NetworkStats};
pub use policies::{ActionSet, PolicyKind};
pub use reward::{RewardFamily, RewardModel};
