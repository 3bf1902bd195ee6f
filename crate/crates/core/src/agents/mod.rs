//! Agents for the three pools (bandit, contextual bandit, tabular RL) behind
//! one interface, plus the agent names used by the CLI.
//!
//! Split agents carry a prefix naming their pool: `b-` for bandits, `cb-` for
//! contextual bandits and none for RL (`b-PD`, `cb-PD`, `PD`).

pub mod bandit;
pub mod contextual;
pub mod select;
pub mod tabular;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};
use crate::profile::{profile_params, BehaviorProfile};
use crate::reward::RewardPair;
use crate::rng::RngStream;

pub use bandit::{BetaArmState, EGreedy, Exp3, Hbts, Thompson, Ucb1};
pub use contextual::{CtsNoise, GaussianLinearStream, LinUcb, Scts, SplitLinearPosterior, Cts};
pub use tabular::{learning_rate, DoubleQ, QLearning, QTable, Sarsa, SplitQ};

/// Outcome of one decision, handed back to the agent that made it.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub state: u64,
    pub action: usize,
    /// Context the decision was made in.
    pub context: &'a [f64],
    pub reward: RewardPair,
    pub next: &'a Observation,
    pub done: bool,
    pub terminal: bool,
}

pub trait Agent: Send {
    fn select(&mut self, obs: &Observation) -> Result<usize>;

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()>;

    /// Stateless agents (bandits, contextual bandits) only act at states
    /// offering a real choice; rewards in between are credited to their last
    /// decision.
    fn is_stateless(&self) -> bool;

    /// `(positive, negative)` value estimates of the last updated action, for
    /// split agents.
    fn stream_values(&self) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pool {
    Bandit,
    Contextual,
    Tabular,
}

impl Pool {
    pub const ALL: [Pool; 3] = [Pool::Bandit, Pool::Contextual, Pool::Tabular];

    pub fn prefix(self) -> &'static str {
        match self {
            Pool::Bandit => "b-",
            Pool::Contextual => "cb-",
            Pool::Tabular => "",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pool::Bandit => "MAB",
            Pool::Contextual => "CB",
            Pool::Tabular => "RL",
        }
    }

    /// Names of the standard, positive-only and negative-only split agents.
    fn split_names(self) -> [&'static str; 3] {
        match self {
            Pool::Bandit => ["HBTS", "PTS", "NTS"],
            Pool::Contextual => ["SCTS", "PCTS", "NCTS"],
            Pool::Tabular => ["SQL", "PQL", "NQL"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    Ts,
    Ucb,
    EGreedy,
    Exp3,
    GExp3,
    Cts,
    LinUcb,
    Ql,
    Dql,
    Sarsa,
}

impl Baseline {
    pub const ALL: [Baseline; 10] = [
        Baseline::Ts,
        Baseline::Ucb,
        Baseline::EGreedy,
        Baseline::Exp3,
        Baseline::GExp3,
        Baseline::Cts,
        Baseline::LinUcb,
        Baseline::Ql,
        Baseline::Dql,
        Baseline::Sarsa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Ts => "TS",
            Baseline::Ucb => "UCB",
            Baseline::EGreedy => "eGreedy",
            Baseline::Exp3 => "EXP3",
            Baseline::GExp3 => "gEXP3",
            Baseline::Cts => "CTS",
            Baseline::LinUcb => "LinUCB",
            Baseline::Ql => "QL",
            Baseline::Dql => "DQL",
            Baseline::Sarsa => "SARSA",
        }
    }

    pub fn pool(self) -> Pool {
        match self {
            Baseline::Ts | Baseline::Ucb | Baseline::EGreedy | Baseline::Exp3 | Baseline::GExp3 => Pool::Bandit,
            Baseline::Cts | Baseline::LinUcb => Pool::Contextual,
            Baseline::Ql | Baseline::Dql | Baseline::Sarsa => Pool::Tabular,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Split(Pool, BehaviorProfile),
    Baseline(Baseline),
}

/// A parsed agent spec string such as `b-PD`, `cb-SCTS`, `SQL` or `LinUCB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
}

impl AgentSpec {
    pub fn split(pool: Pool, profile: BehaviorProfile) -> Self {
        Self {
            kind: AgentKind::Split(pool, profile),
        }
    }

    pub fn baseline(b: Baseline) -> Self {
        Self {
            kind: AgentKind::Baseline(b),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        for b in Baseline::ALL {
            if s == b.name() {
                return Ok(Self::baseline(b));
            }
        }
        // Standard/positive/negative split agents may omit their prefix.
        for pool in Pool::ALL {
            let names = pool.split_names();
            let profiles = [
                BehaviorProfile::Standard,
                BehaviorProfile::PositiveOnly,
                BehaviorProfile::NegativeOnly,
            ];
            for (name, profile) in names.iter().zip(profiles) {
                if s == *name || s.strip_prefix(pool.prefix()) == Some(name) {
                    return Ok(Self::split(pool, profile));
                }
            }
        }
        let (pool, rest) = if let Some(rest) = s.strip_prefix("cb-") {
            (Pool::Contextual, rest)
        } else if let Some(rest) = s.strip_prefix("b-") {
            (Pool::Bandit, rest)
        } else {
            (Pool::Tabular, s)
        };
        match BehaviorProfile::from_tag(rest) {
            Some(p) if p.has_jitter() => Ok(Self::split(pool, p)),
            _ => Err(Error::UnknownAgent(s.to_string())),
        }
    }

    pub fn pool(&self) -> Pool {
        match self.kind {
            AgentKind::Split(pool, _) => pool,
            AgentKind::Baseline(b) => b.pool(),
        }
    }

    pub fn profile(&self) -> Option<BehaviorProfile> {
        match self.kind {
            AgentKind::Split(_, p) => Some(p),
            AgentKind::Baseline(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            AgentKind::Baseline(b) => b.name().to_string(),
            AgentKind::Split(pool, profile) => {
                let base = match profile {
                    BehaviorProfile::Standard => pool.split_names()[0],
                    BehaviorProfile::PositiveOnly => pool.split_names()[1],
                    BehaviorProfile::NegativeOnly => pool.split_names()[2],
                    other => other.tag(),
                };
                format!("{}{}", pool.prefix(), base)
            }
        }
    }

    /// Every split agent of a pool, in profile-table order.
    pub fn split_agents(pool: Pool) -> Vec<AgentSpec> {
        BehaviorProfile::ALL.iter().map(|p| AgentSpec::split(pool, *p)).collect()
    }

    pub fn build(&self, env: &EnvInfo, settings: &AgentSettings, mut rng: RngStream) -> Result<Box<dyn Agent>> {
        let k = env.num_actions;
        let d = env.context_dim;
        let params = |rng: &mut RngStream, profile| profile_params(profile, rng, settings.jitter);
        let bounds = || {
            env.reward_bounds.ok_or_else(|| Error::Incompatible {
                agent: self.name(),
                reason: "it needs bounded rewards and this environment has none".into(),
            })
        };
        let agent: Box<dyn Agent> = match self.kind {
            AgentKind::Split(Pool::Bandit, profile) => {
                let p = params(&mut rng, profile);
                Box::new(Hbts::new(k, p, rng))
            }
            AgentKind::Split(Pool::Contextual, profile) => {
                let p = params(&mut rng, profile);
                Box::new(Scts::new(k, d, p, settings.cts_noise, rng)?)
            }
            AgentKind::Split(Pool::Tabular, profile) => {
                let p = params(&mut rng, profile);
                Box::new(SplitQ::new(p, settings.gamma, settings.epsilon, rng))
            }
            AgentKind::Baseline(b) => match b {
                Baseline::Ts => Box::new(Thompson::new(k, bounds()?, rng)?),
                Baseline::Ucb => Box::new(Ucb1::new(k, bounds()?)?),
                Baseline::EGreedy => Box::new(EGreedy::new(k, settings.epsilon, rng)),
                Baseline::Exp3 => Box::new(Exp3::new(k, settings.exp3_gamma, bounds()?, rng)?),
                Baseline::GExp3 => {
                    Box::new(Exp3::greedy(k, settings.exp3_gamma, settings.epsilon, bounds()?, rng)?)
                }
                Baseline::Cts => Box::new(Cts::new(k, d, settings.cts_noise, rng)?),
                Baseline::LinUcb => Box::new(LinUcb::new(k, d, settings.linucb_alpha, rng)?),
                Baseline::Ql => Box::new(QLearning::new(settings.gamma, settings.epsilon, rng)),
                Baseline::Dql => Box::new(DoubleQ::new(settings.gamma, settings.epsilon, rng)),
                Baseline::Sarsa => Box::new(Sarsa::new(settings.gamma, settings.epsilon, rng)),
            },
        };
        Ok(agent)
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentSpec::parse(s)
    }
}

/// What an agent needs to know about its environment at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvInfo {
    pub num_actions: usize,
    pub context_dim: usize,
    pub reward_bounds: Option<(f64, f64)>,
}

/// Hyper-parameters shared by all agents of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    pub gamma: f64,
    pub epsilon: f64,
    /// Draw profile parameters with population jitter.
    pub jitter: bool,
    pub exp3_gamma: f64,
    pub linucb_alpha: f64,
    pub cts_noise: CtsNoise,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            epsilon: 0.05,
            jitter: true,
            exp3_gamma: 0.1,
            linucb_alpha: 1.0,
            cts_noise: CtsNoise::default(),
        }
    }
}
