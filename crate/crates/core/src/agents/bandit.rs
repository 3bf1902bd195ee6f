//! Multi-armed bandit agents: HBTS (split Beta posteriors) and the TS, UCB1,
//! epsilon-greedy and EXP3 baselines.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::select::{argmax_first, argmax_random, epsilon_greedy};
use super::{Agent, Feedback};
use crate::env::Observation;
use crate::error::{invalid, Result};
use crate::reward::{RewardPair, SplitParams};
use crate::rng::RngStream;

/// Floor on Beta masses so sampling always gets valid parameters.
pub const MASS_FLOOR: f64 = 1e-3;

/// Success and failure mass of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaArmState {
    pub s: f64,
    pub f: f64,
}

impl Default for BetaArmState {
    fn default() -> Self {
        Self { s: 1.0, f: 1.0 }
    }
}

impl BetaArmState {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let theta = Beta::new(self.s, self.f).expect("masses are floored").sample(rng);
        // Extreme masses can underflow inside the sampler; fall back to the mean.
        if theta.is_nan() {
            self.s / (self.s + self.f)
        } else {
            theta
        }
    }
}

/// One Beta draw per arm, play the largest.
pub fn hbts_select<R: Rng + ?Sized>(states: &[BetaArmState], rng: &mut R) -> usize {
    let draws: Vec<f64> = states.iter().map(|s| s.sample(rng)).collect();
    argmax_random(&draws, rng)
}

/// Split update: `S = l+ S + w+ r+`, `F = l- F - w- r-`, both floored.
pub fn hbts_update(state: BetaArmState, rp: RewardPair, params: &SplitParams) -> BetaArmState {
    BetaArmState {
        s: (params.lambda_plus * state.s + params.w_plus * rp.positive).max(MASS_FLOOR),
        f: (params.lambda_minus * state.f - params.w_minus * rp.negative).max(MASS_FLOOR),
    }
}

/// Affine map of a reward range onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    lo: f64,
    hi: f64,
}

impl RewardScale {
    pub fn new((lo, hi): (f64, f64)) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(invalid("reward_bounds", format!("[{lo}, {hi}] is not a finite interval")));
        }
        Ok(Self { lo, hi })
    }

    /// Rewards outside the range are clipped; a degenerate range maps to 1/2.
    pub fn normalize(&self, r: f64) -> f64 {
        if self.hi - self.lo <= f64::EPSILON * self.hi.abs().max(1.0) {
            return 0.5;
        }
        ((r - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// Human-based Thompson sampling.
#[derive(Debug, Clone)]
pub struct Hbts {
    arms: Vec<BetaArmState>,
    params: SplitParams,
    rng: RngStream,
    last: Option<usize>,
}

impl Hbts {
    pub fn new(arms: usize, params: SplitParams, rng: RngStream) -> Self {
        Self {
            arms: vec![BetaArmState::default(); arms],
            params,
            rng,
            last: None,
        }
    }

    pub fn arms(&self) -> &[BetaArmState] {
        &self.arms
    }

    pub fn params(&self) -> &SplitParams {
        &self.params
    }
}

impl Agent for Hbts {
    fn select(&mut self, _obs: &Observation) -> Result<usize> {
        Ok(hbts_select(&self.arms, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        self.arms[fb.action] = hbts_update(self.arms[fb.action], fb.reward, &self.params);
        self.last = Some(fb.action);
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }

    fn stream_values(&self) -> Option<(f64, f64)> {
        self.last.map(|a| (self.arms[a].s, self.arms[a].f))
    }
}

/// Bernoulli Thompson sampling on normalised combined rewards.
#[derive(Debug, Clone)]
pub struct Thompson {
    arms: Vec<BetaArmState>,
    scale: RewardScale,
    rng: RngStream,
}

impl Thompson {
    pub fn new(arms: usize, bounds: (f64, f64), rng: RngStream) -> Result<Self> {
        Ok(Self {
            arms: vec![BetaArmState::default(); arms],
            scale: RewardScale::new(bounds)?,
            rng,
        })
    }

    pub fn arms(&self) -> &[BetaArmState] {
        &self.arms
    }
}

impl Agent for Thompson {
    fn select(&mut self, _obs: &Observation) -> Result<usize> {
        Ok(hbts_select(&self.arms, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let r = self.scale.normalize(fb.reward.combined());
        // Binary rewards pass through without a coin flip.
        let success = if r == 0.0 || r == 1.0 {
            r
        } else {
            f64::from(u8::from(self.rng.random::<f64>() < r))
        };
        let arm = &mut self.arms[fb.action];
        arm.s += success;
        arm.f += 1.0 - success;
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}

/// UCB1 on normalised rewards. Ties go to the smallest index.
#[derive(Debug, Clone)]
pub struct Ucb1 {
    counts: Vec<u64>,
    sums: Vec<f64>,
    scale: RewardScale,
}

impl Ucb1 {
    pub fn new(arms: usize, bounds: (f64, f64)) -> Result<Self> {
        Ok(Self {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            scale: RewardScale::new(bounds)?,
        })
    }

    /// Index values at step `t` (1-based), `None` while some arm is unplayed.
    pub fn indices(&self, t: u64) -> Option<Vec<f64>> {
        if self.counts.contains(&0) {
            return None;
        }
        let ln_t = (t as f64).ln();
        Some(
            self.counts
                .iter()
                .zip(&self.sums)
                .map(|(&n, &s)| s / n as f64 + (2.0 * ln_t / n as f64).sqrt())
                .collect(),
        )
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

impl Agent for Ucb1 {
    fn select(&mut self, _obs: &Observation) -> Result<usize> {
        let t = self.counts.iter().sum::<u64>() + 1;
        Ok(match self.indices(t) {
            None => self.counts.iter().position(|&n| n == 0).expect("some arm unplayed"),
            Some(idx) => argmax_first(&idx),
        })
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        self.counts[fb.action] += 1;
        self.sums[fb.action] += self.scale.normalize(fb.reward.combined());
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}

/// Epsilon-greedy on the empirical mean of combined rewards.
#[derive(Debug, Clone)]
pub struct EGreedy {
    counts: Vec<u64>,
    means: Vec<f64>,
    epsilon: f64,
    rng: RngStream,
}

impl EGreedy {
    pub fn new(arms: usize, epsilon: f64, rng: RngStream) -> Self {
        Self {
            counts: vec![0; arms],
            means: vec![0.0; arms],
            epsilon,
            rng,
        }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

impl Agent for EGreedy {
    fn select(&mut self, _obs: &Observation) -> Result<usize> {
        Ok(epsilon_greedy(&self.means, self.epsilon, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let a = fb.action;
        self.counts[a] += 1;
        self.means[a] += (fb.reward.combined() - self.means[a]) / self.counts[a] as f64;
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}

/// Weights are rescaled once the largest exceeds this, leaving the
/// probabilities unchanged.
const EXP3_RESCALE_AT: f64 = 1e200;

/// EXP3, and its greedy variant gEXP3 that plays the heaviest arm with
/// epsilon exploration instead of sampling.
#[derive(Debug, Clone)]
pub struct Exp3 {
    weights: Vec<f64>,
    gamma: f64,
    greedy_epsilon: Option<f64>,
    scale: RewardScale,
    rng: RngStream,
}

impl Exp3 {
    pub fn new(arms: usize, gamma: f64, bounds: (f64, f64), rng: RngStream) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("exp3_gamma", format!("{gamma} is not in (0, 1]")));
        }
        Ok(Self {
            weights: vec![1.0; arms],
            gamma,
            greedy_epsilon: None,
            scale: RewardScale::new(bounds)?,
            rng,
        })
    }

    pub fn greedy(arms: usize, gamma: f64, epsilon: f64, bounds: (f64, f64), rng: RngStream) -> Result<Self> {
        let mut e = Self::new(arms, gamma, bounds, rng)?;
        e.greedy_epsilon = Some(epsilon);
        Ok(e)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_i = (1 - gamma) w_i / sum(w) + gamma / K`
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / total + self.gamma / k)
            .collect()
    }

    /// Importance-weighted update with a reward already in `[0, 1]`.
    pub fn update_normalized(&mut self, arm: usize, reward: f64) {
        let k = self.weights.len() as f64;
        let p = self.probabilities()[arm];
        let estimate = reward / p;
        self.weights[arm] *= (self.gamma * estimate / k).exp();
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if max > EXP3_RESCALE_AT {
            for w in &mut self.weights {
                *w /= max;
            }
        }
    }
}

impl Agent for Exp3 {
    fn select(&mut self, _obs: &Observation) -> Result<usize> {
        if let Some(eps) = self.greedy_epsilon {
            return Ok(epsilon_greedy(&self.weights, eps, &mut self.rng));
        }
        let probs = self.probabilities();
        let u = self.rng.random::<f64>();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
        Ok(probs.len() - 1)
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let r = self.scale.normalize(fb.reward.combined());
        self.update_normalized(fb.action, r);
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}
