use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::RunResult;
use crate::error::{Error, Result};

/// Ordered-pair win counts over scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub agents: Vec<String>,
    /// `wins[i][j]`: scenarios where agent i's mean final reward strictly
    /// exceeds agent j's.
    pub wins: Vec<Vec<u64>>,
    pub ties: Vec<Vec<u64>>,
    pub units: u64,
}

impl PairwiseMatrix {
    pub fn index(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    /// `(i, j, wins_i, wins_j, ties)` for every unordered pair, in agent order.
    pub fn pairs(&self) -> Vec<(usize, usize, u64, u64, u64)> {
        let n = self.agents.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j, self.wins[i][j], self.wins[j][i], self.ties[i][j]));
            }
        }
        out
    }
}

/// Agents in order of first appearance.
fn agent_order(results: &[RunResult]) -> Vec<String> {
    let mut seen = Vec::new();
    for r in results {
        if !seen.contains(&r.agent) {
            seen.push(r.agent.clone());
        }
    }
    seen
}

/// Mean final reward per (agent, scenario). Repeats are summed in repeat
/// order so the result does not depend on the order of `results`.
fn scenario_means(results: &[RunResult]) -> BTreeMap<(&str, usize), f64> {
    let mut finals: BTreeMap<(&str, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for r in results {
        finals.entry((&r.agent, r.scenario)).or_default().push((r.repeat, r.final_reward));
    }
    finals
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(rep, _)| *rep);
            let sum: f64 = v.iter().map(|(_, f)| f).sum();
            (k, sum / v.len() as f64)
        })
        .collect()
}

pub fn pairwise_wins(results: &[RunResult]) -> Result<PairwiseMatrix> {
    let agents = agent_order(results);
    let scenarios: BTreeSet<usize> = results.iter().map(|r| r.scenario).collect();
    let means = scenario_means(results);
    let n = agents.len();
    let mut wins = vec![vec![0u64; n]; n];
    let mut ties = vec![vec![0u64; n]; n];
    for &s in &scenarios {
        let row: Vec<f64> = agents
            .iter()
            .map(|a| {
                means.get(&(a.as_str(), s)).copied().ok_or_else(|| Error::MissingCell {
                    agent: a.clone(),
                    scenario: s,
                })
            })
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if row[i] > row[j] {
                    wins[i][j] += 1;
                } else if row[i] == row[j] {
                    ties[i][j] += 1;
                }
            }
        }
    }
    Ok(PairwiseMatrix {
        agents,
        wins,
        ties,
        units: scenarios.len() as u64,
    })
}

/// Mean over opponents of the fraction of units won.
pub fn average_wins(m: &PairwiseMatrix) -> Result<Vec<f64>> {
    let n = m.agents.len();
    if n < 2 {
        return Err(Error::MetricUnavailable {
            metric: "average wins".into(),
            reason: "needs at least two agents".into(),
        });
    }
    Ok((0..n)
        .map(|i| {
            let rates: f64 = (0..n)
                .filter(|j| *j != i)
                .map(|j| {
                    let total = m.wins[i][j] + m.wins[j][i] + m.ties[i][j];
                    if total == 0 {
                        0.0
                    } else {
                        m.wins[i][j] as f64 / total as f64
                    }
                })
                .sum();
            rates / (n - 1) as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CumulativeReward,
    BetterAction,
    PositiveStream,
    NegativeStream,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::CumulativeReward,
        Metric::BetterAction,
        Metric::PositiveStream,
        Metric::NegativeStream,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CumulativeReward => "cumulative_reward",
            Metric::BetterAction => "better_action",
            Metric::PositiveStream => "positive_stream",
            Metric::NegativeStream => "negative_stream",
        }
    }

    fn series(self, r: &RunResult) -> Result<Vec<f64>> {
        let unavailable = |reason: &str| Error::MetricUnavailable {
            metric: self.name().into(),
            reason: format!("{}: {reason}", r.agent),
        };
        match self {
            Metric::CumulativeReward => Ok(r
                .rewards
                .iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()),
            Metric::BetterAction => {
                let better = r.better_actions.as_ref().ok_or_else(|| unavailable("task has no better action"))?;
                Ok(r.choices.iter().map(|c| f64::from(u8::from(better.contains(c)))).collect())
            }
            Metric::PositiveStream | Metric::NegativeStream => {
                let sv = r.stream_values.as_ref().ok_or_else(|| unavailable("agent has no split streams"))?;
                Ok(sv
                    .iter()
                    .map(|(p, n)| if self == Metric::PositiveStream { *p } else { *n })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean: f64,
    /// Sample standard deviation over runs divided by sqrt(runs).
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub agent: String,
    pub metric: Metric,
    pub points: Vec<CurvePoint>,
}

/// Running mean and squared deviations per step (Welford).
#[derive(Debug, Clone, Default)]
struct StepStats {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StepStats {
    fn push(&mut self, series: &[f64]) {
        if self.n == 0 {
            self.mean = vec![0.0; series.len()];
            self.m2 = vec![0.0; series.len()];
        }
        let len = self.mean.len().min(series.len());
        self.mean.truncate(len);
        self.m2.truncate(len);
        self.n += 1;
        let n = self.n as f64;
        for (t, x) in series.iter().take(len).enumerate() {
            let delta = x - self.mean[t];
            self.mean[t] += delta / n;
            self.m2[t] += delta * (x - self.mean[t]);
        }
    }

    fn points(&self) -> Vec<CurvePoint> {
        let n = self.n as f64;
        self.mean
            .iter()
            .zip(&self.m2)
            .enumerate()
            .map(|(t, (mean, m2))| CurvePoint {
                step: t + 1,
                mean: *mean,
                se: if self.n < 2 { 0.0 } else { (m2 / (n - 1.0)).sqrt() / n.sqrt() },
            })
            .collect()
    }
}

/// Builds learning curves incrementally, one run at a time. Metrics an
/// agent cannot provide are skipped for that agent.
#[derive(Debug, Clone, Default)]
pub struct CurveAccumulator {
    order: Vec<(String, Metric)>,
    stats: BTreeMap<(String, Metric), StepStats>,
}

impl CurveAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, run: &RunResult) {
        for metric in Metric::ALL {
            if let Ok(series) = metric.series(run) {
                self.push(run, metric, &series);
            }
        }
    }

    fn push(&mut self, run: &RunResult, metric: Metric, series: &[f64]) {
        let key = (run.agent.clone(), metric);
        if !self.stats.contains_key(&key) {
            self.order.push(key.clone());
        }
        self.stats.entry(key).or_default().push(series);
    }

    /// Curves in order of first appearance.
    pub fn finish(&self) -> Vec<LearningCurve> {
        self.order
            .iter()
            .map(|key| LearningCurve {
                agent: key.0.clone(),
                metric: key.1,
                points: self.stats[key].points(),
            })
            .collect()
    }
}

/// Per-agent mean and standard error of `metric` at every step, across all
/// runs of that agent.
pub fn learning_curves(results: &[RunResult], metric: Metric) -> Result<Vec<LearningCurve>> {
    let mut acc = CurveAccumulator::new();
    for agent in agent_order(results) {
        let mut runs: Vec<&RunResult> = results.iter().filter(|r| r.agent == agent).collect();
        runs.sort_by_key(|r| (r.scenario, r.repeat));
        for r in runs {
            acc.push(r, metric, &metric.series(r)?);
        }
    }
    Ok(acc.finish())
}
