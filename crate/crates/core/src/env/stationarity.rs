//! Batch-wise non-stationarity of the reward streams.
//!
//! Episodes arrive in batches. At the start of every batch two independent
//! events are drawn with probability one half each: `A` acts on the positive
//! stream and `B` on the negative stream. The events hold for the whole batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContextSpec, Environment, Observation, Step};
use crate::error::Result;
use crate::reward::RewardPair;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    Stationary,
    /// Active events zero their stream.
    Muting,
    /// Active events multiply their stream by 100.
    Scaling,
    /// Active events negate their stream and hand it to the other one.
    Flipping,
}

impl Stationarity {
    pub const ALL: [Stationarity; 4] = [
        Stationarity::Stationary,
        Stationarity::Muting,
        Stationarity::Scaling,
        Stationarity::Flipping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stationarity::Stationary => "stationary",
            Stationarity::Muting => "muting",
            Stationarity::Scaling => "scaling",
            Stationarity::Flipping => "flipping",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

pub const SCALE_FACTOR: f64 = 100.0;
const EVENT_PROBABILITY: f64 = 0.5;

/// Applies the active events `(a, b)` of `mode` to one reward observation.
pub fn transform_reward(mode: Stationarity, (a, b): (bool, bool), rp: RewardPair) -> RewardPair {
    let RewardPair { positive: p, negative: n } = rp;
    let (positive, negative) = match mode {
        Stationarity::Stationary => (p, n),
        Stationarity::Muting => (if a { 0.0 } else { p }, if b { 0.0 } else { n }),
        Stationarity::Scaling => (
            if a { p * SCALE_FACTOR } else { p },
            if b { n * SCALE_FACTOR } else { n },
        ),
        Stationarity::Flipping => {
            let kept_p = if a { 0.0 } else { p };
            let kept_n = if b { 0.0 } else { n };
            let from_n = if b { -n } else { 0.0 };
            let from_p = if a { -p } else { 0.0 };
            (kept_p + from_n, kept_n + from_p)
        }
    };
    // `+ 0.0` turns -0.0 into 0.0.
    RewardPair {
        positive: positive + 0.0,
        negative: negative + 0.0,
    }
}

/// Draws the per-batch event pairs.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    rng: RngStream,
}

impl EventSchedule {
    pub fn new(rng: RngStream) -> Self {
        Self { rng }
    }

    pub fn next_batch(&mut self) -> (bool, bool) {
        let a = self.rng.random_bool(EVENT_PROBABILITY);
        let b = self.rng.random_bool(EVENT_PROBABILITY);
        (a, b)
    }
}

/// Wraps an environment and transforms its rewards batch by batch.
#[derive(Debug, Clone)]
pub struct StationarityWrapper<E> {
    inner: E,
    mode: Stationarity,
    batch_size: usize,
    schedule: EventSchedule,
    episode: usize,
    events: (bool, bool),
    log: Vec<(bool, bool)>,
}

impl<E: Environment> StationarityWrapper<E> {
    pub fn new(inner: E, mode: Stationarity, batch_size: usize, rng: RngStream) -> Self {
        Self {
            inner,
            mode,
            batch_size: batch_size.max(1),
            schedule: EventSchedule::new(rng),
            episode: 0,
            events: (false, false),
            log: Vec::new(),
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn mode(&self) -> Stationarity {
        self.mode
    }

    /// Events in force for the current episode.
    pub fn events(&self) -> (bool, bool) {
        self.events
    }

    /// Index of the episode started by the most recent `reset`.
    pub fn episode(&self) -> usize {
        self.episode.saturating_sub(1)
    }
}

impl<E: Environment> Environment for StationarityWrapper<E> {
    fn reset(&mut self) -> Observation {
        if self.mode != Stationarity::Stationary && self.episode.is_multiple_of(self.batch_size) {
            self.events = self.schedule.next_batch();
            self.log.push(self.events);
        }
        self.episode += 1;
        self.inner.reset()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let mut step = self.inner.step(action)?;
        step.reward = transform_reward(self.mode, self.events, step.reward);
        Ok(step)
    }

    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn context_spec(&self) -> ContextSpec {
        self.inner.context_spec()
    }

    fn reward_bounds(&self) -> Option<(f64, f64)> {
        match self.mode {
            Stationarity::Stationary | Stationarity::Muting => self.inner.reward_bounds(),
            _ => None,
        }
    }

    fn better_actions(&self) -> Option<Vec<usize>> {
        self.inner.better_actions()
    }

    fn event_log(&self) -> Option<&[(bool, bool)]> {
        Some(&self.log)
    }
}
