//! Evaluation environments behind one episodic interface.
//!
//! Every environment emits [`RewardPair`]s; agents that learn from a single
//! scalar use [`RewardPair::combined`].

mod bimodal;
mod context;
mod gambling;
mod igt;
mod pacman;
mod stationarity;

pub use bimodal::{random_scenario, BimodalSpec, TwoArmScenario};
pub use context::ContextSpec;
pub use gambling::{BanditTask, GamblingMdp};
pub use igt::{decks, Deck, IgtEnv, IgtScheme};
pub use pacman::{Action as PacmanAction, PacmanEnv, DEFAULT_MAX_FRAMES, PACMAN_CONTEXT_DIM};
pub use stationarity::{transform_reward, EventSchedule, Stationarity, StationarityWrapper};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reward::RewardPair;
use crate::rng::StreamId;

/// What an agent sees before acting.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Tabular state id.
    pub state: u64,
    /// Legal actions are `0..actions`.
    pub actions: usize,
    pub context: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Observation,
    pub reward: RewardPair,
    /// The episode is over (terminal or truncated).
    pub done: bool,
    /// The episode ended in a true terminal state; bootstraps are zero.
    pub terminal: bool,
}

pub trait Environment: Send {
    fn reset(&mut self) -> Observation;

    fn step(&mut self, action: usize) -> Result<Step>;

    /// Largest action count over all states.
    fn num_actions(&self) -> usize;

    fn context_spec(&self) -> ContextSpec;

    /// Range of the combined reward earned per agent decision, used by
    /// baselines that expect rewards in `[0, 1]`. `None` when unbounded.
    fn reward_bounds(&self) -> Option<(f64, f64)>;

    /// Actions counted as "better" by the better-action metric.
    fn better_actions(&self) -> Option<Vec<usize>> {
        None
    }

    /// Stationarity events applied so far, one entry per batch.
    fn event_log(&self) -> Option<&[(bool, bool)]> {
        None
    }
}

/// Serializable description of an environment; `build` plus a stream id gives
/// an exact replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Bandit { scenario: TwoArmScenario },
    Mdp { scenario: TwoArmScenario },
    Igt { scheme: IgtScheme },
    Pacman {
        stationarity: Stationarity,
        batch_size: usize,
        max_frames: usize,
    },
}

impl EnvSpec {
    pub fn build(&self, stream: StreamId) -> Box<dyn Environment> {
        match self {
            EnvSpec::Bandit { scenario } => Box::new(BanditTask::new(scenario.clone(), stream.rng())),
            EnvSpec::Mdp { scenario } => Box::new(GamblingMdp::new(scenario.clone(), stream.rng())),
            EnvSpec::Igt { scheme } => Box::new(IgtEnv::new(*scheme, stream.rng())),
            EnvSpec::Pacman {
                stationarity,
                batch_size,
                max_frames,
            } => {
                let env = PacmanEnv::new(stream.rng()).with_max_frames(*max_frames);
                Box::new(StationarityWrapper::new(
                    env,
                    *stationarity,
                    *batch_size,
                    stream.child_str("stationarity").rng(),
                ))
            }
        }
    }
}
