//! Two-stream ("split") reward-processing agents for bandits, contextual
//! bandits and tabular reinforcement learning, the environments they are
//! evaluated on, and a seeded pairwise-comparison harness.
//!
//! Every environment reports rewards as a [`RewardPair`] of a non-negative
//! and a non-positive part. Split agents learn each part separately with the
//! discounts and weights of a [`SplitParams`]; baselines learn from the sum.

pub mod agents;
pub mod env;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod profile;
pub mod reward;
pub mod rng;

pub use agents::{Agent, AgentSettings, AgentSpec, Baseline, Pool};
pub use env::{EnvSpec, Environment, Observation, Step};
pub use error::{Error, Result};
pub use eval::{run_experiment, Experiment, RunResult, Task};
pub use profile::{profile_params, BehaviorProfile};
pub use reward::{split_reward, RewardPair, SplitParams};
pub use rng::{RngStream, StreamId};
