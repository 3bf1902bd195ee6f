//! Tabular agents: split Q-learning and the QL, double QL and SARSA
//! baselines. All share the polynomial learning rate `n^-0.8` and
//! epsilon-greedy exploration.

use std::collections::HashMap;

use rand::Rng;

use super::select::{argmax_first, epsilon_greedy};
use super::{Agent, Feedback};
use crate::env::Observation;
use crate::error::{invalid, Result};
use crate::reward::SplitParams;
use crate::rng::RngStream;

pub fn learning_rate(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "visit count must be at least 1"));
    }
    Ok((n as f64).powf(-0.8))
}

/// Sparse action values with visit counts. Missing entries read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: HashMap<(u64, usize), f64>,
    counts: HashMap<(u64, usize), u64>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: u64, a: usize) -> f64 {
        self.values.get(&(s, a)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, s: u64, a: usize, v: f64) {
        self.values.insert((s, a), v);
    }

    pub fn row(&self, s: u64, actions: usize) -> Vec<f64> {
        (0..actions).map(|a| self.get(s, a)).collect()
    }

    pub fn max(&self, s: u64, actions: usize) -> f64 {
        (0..actions).map(|a| self.get(s, a)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count(&self, s: u64, a: usize) -> u64 {
        self.counts.get(&(s, a)).copied().unwrap_or(0)
    }

    /// Records a visit and returns the new count.
    pub fn visit(&mut self, s: u64, a: usize) -> u64 {
        let n = self.counts.entry((s, a)).or_insert(0);
        *n += 1;
        *n
    }

    pub fn total_visits(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, usize), &f64)> {
        self.values.iter()
    }
}

/// Value of the successor for a bootstrap target: zero at true terminals,
/// otherwise `table` maxed over the next state's actions.
fn bootstrap(table: &QTable, fb: &Feedback<'_>) -> f64 {
    if fb.terminal {
        0.0
    } else {
        table.max(fb.next.state, fb.next.actions)
    }
}

/// Split Q-learning: positive and negative tables updated from their own
/// reward streams, acting greedily on their sum.
#[derive(Debug, Clone)]
pub struct SplitQ {
    q_plus: QTable,
    q_minus: QTable,
    params: SplitParams,
    gamma: f64,
    epsilon: f64,
    rng: RngStream,
    last: Option<(u64, usize)>,
}

impl SplitQ {
    pub fn new(params: SplitParams, gamma: f64, epsilon: f64, rng: RngStream) -> Self {
        Self {
            q_plus: QTable::new(),
            q_minus: QTable::new(),
            params,
            gamma,
            epsilon,
            rng,
            last: None,
        }
    }

    pub fn q_plus(&self) -> &QTable {
        &self.q_plus
    }

    pub fn q_minus(&self) -> &QTable {
        &self.q_minus
    }

    pub fn combined(&self, s: u64, a: usize) -> f64 {
        self.q_plus.get(s, a) + self.q_minus.get(s, a)
    }
}

impl Agent for SplitQ {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        let values: Vec<f64> = (0..obs.actions).map(|a| self.combined(obs.state, a)).collect();
        Ok(epsilon_greedy(&values, self.epsilon, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let (s, a) = (fb.state, fb.action);
        let p = &self.params;
        let alpha = learning_rate(self.q_plus.visit(s, a))?;
        self.q_minus.visit(s, a);

        let hat_plus = self.q_plus.get(s, a);
        let hat_minus = self.q_minus.get(s, a);
        let next_plus = bootstrap(&self.q_plus, fb);
        let next_minus = bootstrap(&self.q_minus, fb);
        let plus = p.lambda_plus * hat_plus
            + alpha * (p.w_plus * fb.reward.positive + self.gamma * next_plus - hat_plus);
        let minus = p.lambda_minus * hat_minus
            + alpha * (p.w_minus * fb.reward.negative + self.gamma * next_minus - hat_minus);
        self.q_plus.set(s, a, plus);
        self.q_minus.set(s, a, minus);
        self.last = Some((s, a));
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        false
    }

    fn stream_values(&self) -> Option<(f64, f64)> {
        self.last.map(|(s, a)| (self.q_plus.get(s, a), self.q_minus.get(s, a)))
    }
}

/// Q-learning on the combined reward.
#[derive(Debug, Clone)]
pub struct QLearning {
    q: QTable,
    gamma: f64,
    epsilon: f64,
    rng: RngStream,
}

impl QLearning {
    pub fn new(gamma: f64, epsilon: f64, rng: RngStream) -> Self {
        Self {
            q: QTable::new(),
            gamma,
            epsilon,
            rng,
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }
}

impl Agent for QLearning {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        Ok(epsilon_greedy(&self.q.row(obs.state, obs.actions), self.epsilon, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let (s, a) = (fb.state, fb.action);
        let alpha = learning_rate(self.q.visit(s, a))?;
        let hat = self.q.get(s, a);
        let target = fb.reward.combined() + self.gamma * bootstrap(&self.q, fb);
        self.q.set(s, a, hat + alpha * (target - hat));
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        false
    }
}

/// Double Q-learning: a fair coin picks which table to update, the other
/// table evaluates the updated table's greedy successor action.
#[derive(Debug, Clone)]
pub struct DoubleQ {
    a: QTable,
    b: QTable,
    gamma: f64,
    epsilon: f64,
    rng: RngStream,
}

impl DoubleQ {
    pub fn new(gamma: f64, epsilon: f64, rng: RngStream) -> Self {
        Self {
            a: QTable::new(),
            b: QTable::new(),
            gamma,
            epsilon,
            rng,
        }
    }

    pub fn tables(&self) -> (&QTable, &QTable) {
        (&self.a, &self.b)
    }
}

impl Agent for DoubleQ {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        let values: Vec<f64> = (0..obs.actions)
            .map(|a| self.a.get(obs.state, a) + self.b.get(obs.state, a))
            .collect();
        Ok(epsilon_greedy(&values, self.epsilon, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let (s, a) = (fb.state, fb.action);
        let (x, y) = if self.rng.random_bool(0.5) {
            (&mut self.a, &self.b)
        } else {
            (&mut self.b, &self.a)
        };
        let alpha = learning_rate(x.visit(s, a))?;
        let next = if fb.terminal {
            0.0
        } else {
            let best = argmax_first(&x.row(fb.next.state, fb.next.actions));
            y.get(fb.next.state, best)
        };
        let hat = x.get(s, a);
        x.set(s, a, hat + alpha * (fb.reward.combined() + self.gamma * next - hat));
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        false
    }
}

/// On-policy SARSA. A non-terminal transition waits until the next action
/// has been chosen; truncated episodes bootstrap from the greedy value.
#[derive(Debug, Clone)]
pub struct Sarsa {
    q: QTable,
    gamma: f64,
    epsilon: f64,
    rng: RngStream,
    pending: Option<(u64, usize, f64, u64)>,
}

impl Sarsa {
    pub fn new(gamma: f64, epsilon: f64, rng: RngStream) -> Self {
        Self {
            q: QTable::new(),
            gamma,
            epsilon,
            rng,
            pending: None,
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    fn apply(&mut self, s: u64, a: usize, r: f64, next: f64) -> Result<()> {
        let alpha = learning_rate(self.q.visit(s, a))?;
        let hat = self.q.get(s, a);
        self.q.set(s, a, hat + alpha * (r + self.gamma * next - hat));
        Ok(())
    }
}

impl Agent for Sarsa {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        let action = epsilon_greedy(&self.q.row(obs.state, obs.actions), self.epsilon, &mut self.rng);
        if let Some((s, a, r, next)) = self.pending.take() {
            debug_assert_eq!(next, obs.state);
            let q_next = self.q.get(obs.state, action);
            self.apply(s, a, r, q_next)?;
        }
        Ok(action)
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        let r = fb.reward.combined();
        if fb.terminal {
            self.apply(fb.state, fb.action, r, 0.0)
        } else if fb.done {
            let next = self.q.max(fb.next.state, fb.next.actions);
            self.apply(fb.state, fb.action, r, next)
        } else {
            self.pending = Some((fb.state, fb.action, r, fb.next.state));
            Ok(())
        }
    }

    fn is_stateless(&self) -> bool {
        false
    }
}
