//! Experiment configuration: defaults, JSON config files and flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use split_decision::agents::{Baseline, Pool};
use split_decision::env::{IgtScheme, Stationarity, DEFAULT_MAX_FRAMES};
use split_decision::eval::{Experiment, Task};
use split_decision::{AgentSettings, AgentSpec};

use crate::CliError;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "SPLIT_DECISION_SEED";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Mab,
    Mdp,
    Igt,
    Pacman,
}

impl TaskKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "mab" => Ok(TaskKind::Mab),
            "mdp" => Ok(TaskKind::Mdp),
            "igt" => Ok(TaskKind::Igt),
            "pacman" => Ok(TaskKind::Pacman),
            other => Err(CliError::invalid("task", format!("unknown task `{other}` (expected mab, mdp, igt or pacman)"))),
        }
    }

    /// `(scenarios, repeats, horizon)` used when not configured.
    pub fn default_sizes(self) -> (usize, usize, usize) {
        match self {
            TaskKind::Mab | TaskKind::Mdp => (100, 50, 1000),
            TaskKind::Igt => (1, 200, 500),
            TaskKind::Pacman => (1, 50, 200),
        }
    }

    /// The agent pool a task runs when no agents are given: the split
    /// agents of that pool plus its baselines.
    pub fn default_pool(self) -> Pool {
        match self {
            TaskKind::Mab => Pool::Bandit,
            TaskKind::Igt => Pool::Contextual,
            TaskKind::Mdp | TaskKind::Pacman => Pool::Tabular,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::invalid("format", format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

/// Every setting that may come from a flag or a config file. Unset fields
/// fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub task: Option<TaskKind>,
    pub agents: Option<Vec<String>>,
    pub scenarios: Option<usize>,
    pub repeats: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Option<u8>,
    pub stationarity: Option<Stationarity>,
    pub batch_size: Option<usize>,
    pub max_frames: Option<usize>,
    pub jitter: Option<bool>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Overrides {
    /// Fields set in `self` win over `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            task: self.task.or(lower.task),
            agents: self.agents.or(lower.agents),
            scenarios: self.scenarios.or(lower.scenarios),
            repeats: self.repeats.or(lower.repeats),
            horizon: self.horizon.or(lower.horizon),
            seed: self.seed.or(lower.seed),
            scheme: self.scheme.or(lower.scheme),
            stationarity: self.stationarity.or(lower.stationarity),
            batch_size: self.batch_size.or(lower.batch_size),
            max_frames: self.max_frames.or(lower.max_frames),
            jitter: self.jitter.or(lower.jitter),
            gamma: self.gamma.or(lower.gamma),
            epsilon: self.epsilon.or(lower.epsilon),
            jobs: self.jobs.or(lower.jobs),
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
        match value {
            Value::Object(map) => Self::from_map(&map),
            _ => Err(CliError::invalid("config", "top level must be a JSON object")),
        }
    }

    pub fn from_map(map: &Map<String, Value>) -> Result<Self, CliError> {
        let mut o = Overrides::default();
        for (key, value) in map {
            let k = key.as_str();
            match k {
                "task" => o.task = Some(TaskKind::parse(str_value(k, value)?)?),
                "agents" => {
                    let list = match value {
                        Value::Array(items) => items
                            .iter()
                            .map(|v| str_value(k, v).map(str::to_string))
                            .collect::<Result<Vec<_>, _>>()?,
                        Value::String(s) => split_list(s),
                        _ => return Err(CliError::invalid(k, "expected a list of agent names")),
                    };
                    o.agents = Some(list);
                }
                "scenarios" => o.scenarios = Some(uint_value(k, value)? as usize),
                "repeats" => o.repeats = Some(uint_value(k, value)? as usize),
                "horizon" => o.horizon = Some(uint_value(k, value)? as usize),
                "seed" => o.seed = Some(uint_value(k, value)?),
                "scheme" => {
                    let n = match value {
                        Value::String(s) => s.parse::<u64>().map_err(|_| CliError::invalid(k, "expected 1 or 2"))?,
                        _ => uint_value(k, value)?,
                    };
                    o.scheme = Some(u8::try_from(n).map_err(|_| CliError::invalid(k, "expected 1 or 2"))?);
                }
                "stationarity" => o.stationarity = Some(parse_stationarity(str_value(k, value)?)?),
                "batch_size" => o.batch_size = Some(uint_value(k, value)? as usize),
                "max_frames" => o.max_frames = Some(uint_value(k, value)? as usize),
                "jitter" => o.jitter = Some(value.as_bool().ok_or_else(|| CliError::invalid(k, "expected true or false"))?),
                "gamma" => o.gamma = Some(float_value(k, value)?),
                "epsilon" => o.epsilon = Some(float_value(k, value)?),
                "jobs" => o.jobs = Some(uint_value(k, value)? as usize),
                "out" => o.out = Some(PathBuf::from(str_value(k, value)?)),
                "format" => o.format = Some(Format::parse(str_value(k, value)?)?),
                _ => return Err(CliError::invalid(k, "unknown configuration key")),
            }
        }
        Ok(o)
    }
}

fn str_value<'a>(key: &str, v: &'a Value) -> Result<&'a str, CliError> {
    v.as_str().ok_or_else(|| CliError::invalid(key, "expected a string"))
}

fn uint_value(key: &str, v: &Value) -> Result<u64, CliError> {
    v.as_u64().ok_or_else(|| CliError::invalid(key, "expected a non-negative integer"))
}

fn float_value(key: &str, v: &Value) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| CliError::invalid(key, "expected a number"))
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|a| !a.is_empty()).map(str::to_string).collect()
}

pub fn parse_stationarity(s: &str) -> Result<Stationarity, CliError> {
    Stationarity::from_name(s).ok_or_else(|| {
        CliError::invalid(
            "stationarity",
            format!("unknown mode `{s}` (expected stationary, muting, scaling or flipping)"),
        )
    })
}

/// A fully resolved configuration. This is what gets echoed next to the
/// outputs and recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub agents: Vec<String>,
    pub scenarios: usize,
    pub repeats: usize,
    pub horizon: usize,
    pub seed: u64,
    pub scheme: u8,
    pub stationarity: Stationarity,
    pub batch_size: usize,
    pub max_frames: usize,
    pub jitter: bool,
    pub gamma: f64,
    pub epsilon: f64,
    pub jobs: usize,
    pub out: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    /// Resolves `layers` (highest precedence first; typically flags then
    /// file), then the seed environment variable, then defaults.
    pub fn resolve(layers: Overrides, env_seed: Option<&str>) -> Result<Self, CliError> {
        let o = layers;
        let task = o.task.unwrap_or(TaskKind::Mab);
        let (scenarios, repeats, horizon) = task.default_sizes();
        let seed = match (o.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse()
                .map_err(|_| CliError::invalid("seed", format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
            (None, None) => DEFAULT_SEED,
        };
        let agents = match o.agents {
            Some(list) => list,
            None => default_agents(task),
        };
        let settings = AgentSettings::default();
        let cfg = ExperimentConfig {
            task,
            agents,
            scenarios: o.scenarios.unwrap_or(scenarios),
            repeats: o.repeats.unwrap_or(repeats),
            horizon: o.horizon.unwrap_or(horizon),
            seed,
            scheme: o.scheme.unwrap_or(1),
            stationarity: o.stationarity.unwrap_or(Stationarity::Stationary),
            batch_size: o.batch_size.unwrap_or(10),
            max_frames: o.max_frames.unwrap_or(DEFAULT_MAX_FRAMES),
            jitter: o.jitter.unwrap_or(settings.jitter),
            gamma: o.gamma.unwrap_or(settings.gamma),
            epsilon: o.epsilon.unwrap_or(settings.epsilon),
            jobs: o.jobs.unwrap_or(0),
            out: o.out.unwrap_or_else(|| PathBuf::from("results")),
            format: o.format.unwrap_or(Format::Csv),
        };
        cfg.experiment()?;
        Ok(cfg)
    }

    pub fn agent_specs(&self) -> Result<Vec<AgentSpec>, CliError> {
        if self.agents.is_empty() {
            return Err(CliError::invalid("agents", "at least one agent is required"));
        }
        let mut specs = Vec::with_capacity(self.agents.len());
        for name in &self.agents {
            let spec = AgentSpec::parse(name).map_err(|_| CliError::UnknownAgent(name.clone()))?;
            if specs.contains(&spec) {
                return Err(CliError::invalid("agents", format!("`{name}` is listed twice")));
            }
            specs.push(spec);
        }
        Ok(specs)
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let task = match self.task {
            TaskKind::Mab => Task::Mab,
            TaskKind::Mdp => Task::Mdp,
            TaskKind::Igt => Task::Igt {
                scheme: IgtScheme::from_number(self.scheme)
                    .ok_or_else(|| CliError::invalid("scheme", format!("{} is not 1 or 2", self.scheme)))?,
            },
            TaskKind::Pacman => Task::Pacman {
                stationarity: self.stationarity,
                batch_size: self.batch_size,
                max_frames: self.max_frames,
            },
        };
        for (key, value) in [
            ("scenarios", self.scenarios),
            ("repeats", self.repeats),
            ("horizon", self.horizon),
            ("batch_size", self.batch_size),
            ("max_frames", self.max_frames),
        ] {
            if value == 0 {
                return Err(CliError::invalid(key, "must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CliError::invalid("gamma", format!("{} is not in [0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(CliError::invalid("epsilon", format!("{} is not in [0, 1]", self.epsilon)));
        }
        Ok(Experiment {
            task,
            agents: self.agent_specs()?,
            scenarios: self.scenarios,
            repeats: self.repeats,
            horizon: self.horizon,
            seed: self.seed,
            settings: AgentSettings {
                gamma: self.gamma,
                epsilon: self.epsilon,
                jitter: self.jitter,
                ..AgentSettings::default()
            },
        })
    }
}

fn default_agents(task: TaskKind) -> Vec<String> {
    let pool = task.default_pool();
    let mut names: Vec<String> = AgentSpec::split_agents(pool).iter().map(AgentSpec::name).collect();
    for b in Baseline::ALL {
        // PacMan rewards are unbounded, which rules out the bounded bandits.
        let needs_bounds = matches!(b, Baseline::Ts | Baseline::Ucb | Baseline::Exp3 | Baseline::GExp3);
        if b.pool() == pool && !(task == TaskKind::Pacman && needs_bounds) {
            names.push(b.name().to_string());
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn from_json(v: Value) -> Result<Overrides, CliError> {
        Overrides::from_map(v.as_object().unwrap())
    }

    #[test]
    fn igt_defaults() {
        let cfg = ExperimentConfig::resolve(from_json(json!({"task": "igt"})).unwrap(), None).unwrap();
        assert_eq!((cfg.scheme, cfg.repeats, cfg.horizon, cfg.scenarios), (1, 200, 500, 1));
        assert_eq!((cfg.gamma, cfg.epsilon, cfg.batch_size), (0.95, 0.05, 10));
    }

    #[test]
    fn precedence_flags_file_env_default() {
        let file = from_json(json!({"seed": 7, "repeats": 3})).unwrap();
        let flags = Overrides {
            seed: Some(42),
            ..Overrides::default()
        };
        let cfg = ExperimentConfig::resolve(flags.clone().over(file.clone()), Some("9")).unwrap();
        assert_eq!((cfg.seed, cfg.repeats), (42, 3));
        let cfg = ExperimentConfig::resolve(Overrides::default().over(file), Some("9")).unwrap();
        assert_eq!(cfg.seed, 7);
        let cfg = ExperimentConfig::resolve(Overrides::default(), Some("9")).unwrap();
        assert_eq!(cfg.seed, 9);
        let cfg = ExperimentConfig::resolve(Overrides::default(), None).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn errors_name_the_key() {
        let e = from_json(json!({"stationarity": "sideways"})).unwrap_err();
        assert!(matches!(&e, CliError::InvalidValue { key, .. } if key == "stationarity"));
        let e = from_json(json!({"bogus": 1})).unwrap_err();
        assert!(matches!(&e, CliError::InvalidValue { key, .. } if key == "bogus"));
        let e = ExperimentConfig::resolve(from_json(json!({"agents": ["b-XYZ"]})).unwrap(), None).unwrap_err();
        assert!(matches!(e, CliError::UnknownAgent(ref a) if a == "b-XYZ"));
        let e = ExperimentConfig::resolve(from_json(json!({"task": "igt", "scheme": 3})).unwrap(), None).unwrap_err();
        assert!(matches!(&e, CliError::InvalidValue { key, .. } if key == "scheme"));
        assert_ne!(CliError::UnknownAgent("x".into()).exit_code(), e.exit_code());
    }

    #[test]
    fn default_agents_fit_their_task() {
        let mab = default_agents(TaskKind::Mab);
        assert!(mab.contains(&"b-HBTS".to_string()) && mab.contains(&"EXP3".to_string()));
        assert_eq!(mab.len(), 15);
        let pac = default_agents(TaskKind::Pacman);
        assert_eq!(pac.len(), 13);
        assert!(pac.contains(&"SQL".to_string()));
    }

    #[test]
    fn agents_accept_a_comma_list() {
        let o = from_json(json!({"agents": "TS, b-PD"})).unwrap();
        assert_eq!(o.agents.unwrap(), vec!["TS", "b-PD"]);
    }
}
