use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSettings, AgentSpec, EnvInfo, Feedback};
use crate::env::{random_scenario, EnvSpec, IgtScheme, Stationarity};
use crate::error::{invalid, Error, Result};
use crate::reward::RewardPair;
use crate::rng::StreamId;

/// Experiment family. The horizon counts episodes: single pulls for the
/// bandit and IGT tasks, two-step walks for the MDP, full games for PacMan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Mab,
    Mdp,
    Igt {
        scheme: IgtScheme,
    },
    Pacman {
        stationarity: Stationarity,
        batch_size: usize,
        max_frames: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Mab => "mab",
            Task::Mdp => "mdp",
            Task::Igt { .. } => "igt",
            Task::Pacman { .. } => "pacman",
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub task: Task,
    pub agents: Vec<AgentSpec>,
    pub scenarios: usize,
    pub repeats: usize,
    pub horizon: usize,
    pub seed: u64,
    pub settings: AgentSettings,
}

/// Seeds of one (scenario, repeat, agent) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: usize,
    pub repeat: usize,
    pub env_stream: StreamId,
    pub agent_stream: StreamId,
}

impl Experiment {
    fn root(&self) -> StreamId {
        StreamId::new(self.seed, 0)
    }

    /// Environment of every scenario. Bandit tasks draw a fresh bimodal pair
    /// per scenario; the others repeat one fixed environment.
    pub fn scenario_specs(&self) -> Vec<EnvSpec> {
        let gen = self.root().child_str("scenario");
        (0..self.scenarios)
            .map(|i| match self.task {
                Task::Mab => EnvSpec::Bandit {
                    scenario: random_scenario(&mut gen.child(i as u64).rng()),
                },
                Task::Mdp => EnvSpec::Mdp {
                    scenario: random_scenario(&mut gen.child(i as u64).rng()),
                },
                Task::Igt { scheme } => EnvSpec::Igt { scheme },
                Task::Pacman {
                    stationarity,
                    batch_size,
                    max_frames,
                } => EnvSpec::Pacman {
                    stationarity,
                    batch_size,
                    max_frames,
                },
            })
            .collect()
    }

    /// Environment noise depends on (scenario, repeat) only, so every agent
    /// faces the same draws; agent randomness is keyed by the agent's name.
    pub fn cell(&self, scenario: usize, repeat: usize, agent: &AgentSpec) -> Cell {
        let base = self.root();
        Cell {
            scenario,
            repeat,
            env_stream: base.child_str("env").child(scenario as u64).child(repeat as u64),
            agent_stream: base
                .child_str("agent")
                .child(scenario as u64)
                .child(repeat as u64)
                .child_str(&agent.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(invalid("agents", "at least one agent is required"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.scenarios == 0 || self.repeats == 0 {
            return Err(invalid("scenarios", "scenarios and repeats must be at least 1"));
        }
        if let Task::Pacman { batch_size: 0, .. } = self.task {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Record of one agent run over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub agent: String,
    pub scenario: usize,
    pub repeat: usize,
    pub cell: Cell,
    /// Combined reward earned in each episode.
    pub rewards: Vec<f64>,
    pub final_reward: f64,
    /// First real decision of each episode.
    pub choices: Vec<usize>,
    pub better_actions: Option<Vec<usize>>,
    /// Split agents' stream estimates after each episode.
    pub stream_values: Option<Vec<(f64, f64)>>,
    /// Stationarity events, one per batch.
    pub events: Option<Vec<(bool, bool)>>,
}

struct Decision {
    state: u64,
    action: usize,
    context: Vec<f64>,
    reward: RewardPair,
}

/// Runs one agent for `horizon` episodes on a fresh replica of `env_spec`.
pub fn run_cell(
    env_spec: &EnvSpec,
    agent_spec: &AgentSpec,
    settings: &AgentSettings,
    horizon: usize,
    cell: Cell,
) -> Result<RunResult> {
    let mut env = env_spec.build(cell.env_stream);
    let info = EnvInfo {
        num_actions: env.num_actions(),
        context_dim: env.context_spec().dim(),
        reward_bounds: env.reward_bounds(),
    };
    let mut agent = agent_spec.build(&info, settings, cell.agent_stream.rng())?;
    let stateless = agent.is_stateless();

    let mut rewards = Vec::with_capacity(horizon);
    let mut choices = Vec::with_capacity(horizon);
    let mut streams = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut obs = env.reset();
        let mut total = 0.0;
        let mut choice = None;
        // Decision awaiting credit, for stateless agents.
        let mut open: Option<Decision> = None;
        loop {
            let decide = !stateless || obs.actions > 1;
            let action = if decide {
                let a = agent.select(&obs)?;
                if a >= obs.actions {
                    return Err(Error::InvalidAction {
                        action: a,
                        available: obs.actions,
                    });
                }
                if choice.is_none() && obs.actions > 1 {
                    choice = Some(a);
                }
                a
            } else {
                0
            };
            let step = env.step(action)?;
            total += step.reward.combined();

            if stateless {
                if decide {
                    open = Some(Decision {
                        state: obs.state,
                        action,
                        context: obs.context.clone(),
                        reward: RewardPair::ZERO,
                    });
                }
                if let Some(d) = open.as_mut() {
                    d.reward += step.reward;
                }
                let next_decides = step.observation.actions > 1;
                if step.done || next_decides {
                    if let Some(d) = open.take() {
                        agent.update(&Feedback {
                            state: d.state,
                            action: d.action,
                            context: &d.context,
                            reward: d.reward,
                            next: &step.observation,
                            done: step.done,
                            terminal: step.terminal,
                        })?;
                    }
                }
            } else {
                agent.update(&Feedback {
                    state: obs.state,
                    action,
                    context: &obs.context,
                    reward: step.reward,
                    next: &step.observation,
                    done: step.done,
                    terminal: step.terminal,
                })?;
            }
            if step.done {
                break;
            }
            obs = step.observation;
        }
        rewards.push(total);
        choices.push(choice.unwrap_or(0));
        if let Some(sv) = agent.stream_values() {
            streams.push(sv);
        }
    }
    let final_reward = rewards.iter().sum();
    Ok(RunResult {
        agent: agent_spec.name(),
        scenario: cell.scenario,
        repeat: cell.repeat,
        cell,
        rewards,
        final_reward,
        choices,
        better_actions: env.better_actions(),
        stream_values: (streams.len() == horizon).then_some(streams),
        events: env.event_log().map(<[_]>::to_vec),
    })
}

/// Runs every (scenario, agent, repeat) cell, in parallel when `jobs` allows
/// (`0` uses every core). Results come back ordered by scenario, then agent,
/// then repeat, whatever the scheduling.
pub fn run_experiment(exp: &Experiment, jobs: usize) -> Result<Vec<RunResult>> {
    let mut all = Vec::new();
    for_each_scenario(exp, jobs, |batch| {
        all.extend(batch);
        Ok::<_, Error>(())
    })?;
    Ok(all)
}

/// Like [`run_experiment`] but hands over one scenario's results at a time,
/// so callers can aggregate without holding every trajectory in memory.
pub fn for_each_scenario<E, F>(exp: &Experiment, jobs: usize, mut sink: F) -> std::result::Result<(), E>
where
    E: From<Error>,
    F: FnMut(Vec<RunResult>) -> std::result::Result<(), E>,
{
    exp.validate()?;
    let specs = exp.scenario_specs();

    // Surface incompatibilities before any run starts.
    let probe = specs[0].build(exp.root());
    let info = EnvInfo {
        num_actions: probe.num_actions(),
        context_dim: probe.context_spec().dim(),
        reward_bounds: probe.reward_bounds(),
    };
    for agent in &exp.agents {
        agent.build(&info, &exp.settings, exp.root().rng())?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    for (s, spec) in specs.iter().enumerate() {
        let cells: Vec<(&AgentSpec, Cell)> = exp
            .agents
            .iter()
            .flat_map(|agent| (0..exp.repeats).map(move |r| (agent, exp.cell(s, r, agent))))
            .collect();
        let batch = pool.install(|| {
            cells
                .par_iter()
                .map(|(agent, cell)| run_cell(spec, agent, &exp.settings, exp.horizon, *cell))
                .collect::<Result<Vec<_>>>()
        })?;
        sink(batch)?;
    }
    Ok(())
}

impl RunResult {
    /// Copy without the per-episode series; enough for pairwise comparison.
    pub fn summary(&self) -> RunResult {
        RunResult {
            rewards: Vec::new(),
            choices: Vec::new(),
            stream_values: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Baseline;
    use crate::profile::BehaviorProfile;
    use crate::agents::Pool;

    fn experiment(task: Task, agents: Vec<AgentSpec>) -> Experiment {
        Experiment {
            task,
            agents,
            scenarios: 3,
            repeats: 2,
            horizon: 50,
            seed: 17,
            settings: AgentSettings::default(),
        }
    }

    #[test]
    fn cardinality_and_order() {
        let exp = experiment(
            Task::Mab,
            vec![AgentSpec::baseline(Baseline::Ts), AgentSpec::split(Pool::Bandit, BehaviorProfile::Standard)],
        );
        let results = run_experiment(&exp, 2).unwrap();
        assert_eq!(results.len(), 12);
        let keys: Vec<_> = results.iter().map(|r| (r.scenario, r.agent.clone(), r.repeat)).collect();
        assert_eq!(keys[0], (0, "TS".to_string(), 0));
        assert_eq!(keys[3], (0, "b-HBTS".to_string(), 1));
        for r in &results {
            assert_eq!(r.rewards.len(), 50);
            assert!((r.final_reward - r.rewards.iter().sum::<f64>()).abs() < 1e-9);
        }
    }

    #[test]
    fn reruns_are_bit_identical_regardless_of_threads() {
        let exp = experiment(
            Task::Mdp,
            vec![AgentSpec::parse("PD").unwrap(), AgentSpec::parse("b-ADHD").unwrap(), AgentSpec::parse("CTS").unwrap()],
        );
        let a = run_experiment(&exp, 1).unwrap();
        let b = run_experiment(&exp, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agent_results_do_not_depend_on_company() {
        let ts = AgentSpec::baseline(Baseline::Ts);
        let one = run_experiment(&experiment(Task::Mab, vec![ts]), 1).unwrap();
        let two = run_experiment(&experiment(Task::Mab, vec![AgentSpec::baseline(Baseline::Ucb), ts]), 1).unwrap();
        let two: Vec<_> = two.into_iter().filter(|r| r.agent == "TS").collect();
        assert_eq!(one, two);
    }

    #[test]
    fn single_cell_replays() {
        let exp = experiment(Task::Igt { scheme: IgtScheme::Two }, vec![AgentSpec::parse("cb-SCTS").unwrap()]);
        let results = run_experiment(&exp, 0).unwrap();
        let specs = exp.scenario_specs();
        let r = &results[3];
        let again = run_cell(&specs[r.scenario], &exp.agents[0], &exp.settings, exp.horizon, r.cell).unwrap();
        assert_eq!(&again, r);
    }

    #[test]
    fn stateless_agents_decide_once_per_mdp_episode() {
        let exp = experiment(Task::Mdp, vec![AgentSpec::baseline(Baseline::Ucb)]);
        let results = run_experiment(&exp, 1).unwrap();
        // UCB sweeps both arms first, so its first two choices are 0 and 1.
        assert_eq!(&results[0].choices[..2], &[0, 1]);
    }

    #[test]
    fn incompatible_agents_fail_before_running() {
        let exp = experiment(
            Task::Pacman {
                stationarity: Stationarity::Flipping,
                batch_size: 10,
                max_frames: 100,
            },
            vec![AgentSpec::parse("SQL").unwrap(), AgentSpec::baseline(Baseline::Ts)],
        );
        assert!(matches!(run_experiment(&exp, 1), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn pacman_runs_record_events() {
        let mut exp = experiment(
            Task::Pacman {
                stationarity: Stationarity::Muting,
                batch_size: 5,
                max_frames: 60,
            },
            vec![AgentSpec::parse("SQL").unwrap(), AgentSpec::parse("cb-SCTS").unwrap()],
        );
        exp.scenarios = 1;
        exp.horizon = 20;
        let results = run_experiment(&exp, 1).unwrap();
        for r in &results {
            assert_eq!(r.events.as_ref().unwrap().len(), 4);
        }
        assert_eq!(results[0].events, results[2].events);
    }

    #[test]
    fn rejects_empty_setups() {
        let mut exp = experiment(Task::Mab, vec![]);
        assert!(run_experiment(&exp, 1).is_err());
        exp.agents.push(AgentSpec::baseline(Baseline::Ts));
        exp.horizon = 0;
        assert!(run_experiment(&exp, 1).is_err());
    }
}
