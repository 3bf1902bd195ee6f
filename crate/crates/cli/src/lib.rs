//! Library side of the `split-decision` command-line tool.
//!
//! The binary is a thin wrapper around [`execute`]; keeping the commands
//! here lets tests drive them without spawning processes.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod config;
pub mod output;
pub mod replay;

pub use config::{ExperimentConfig, Format, Overrides, TaskKind};

/// Failure classes of the tool. Each maps to a distinct exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("unknown agent `{0}` (run `split-decision list-agents` for valid names)")]
    UnknownAgent(String),

    #[error("cannot read {}: {reason}", path.display())]
    MissingFile { path: PathBuf, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    #[error(transparent)]
    Core(#[from] split_decision::Error),
}

impl CliError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::InvalidValue {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownAgent(_) => exit::UNKNOWN_AGENT,
            CliError::InvalidValue { .. } => exit::INVALID_VALUE,
            CliError::MissingFile { .. } => exit::MISSING_FILE,
            CliError::Io { .. } => exit::IO,
            CliError::ReplayMismatch(_) => exit::REPLAY_MISMATCH,
            CliError::Core(e) => match e {
                split_decision::Error::UnknownAgent(_) => exit::UNKNOWN_AGENT,
                split_decision::Error::Incompatible { .. } => exit::INCOMPATIBLE,
                split_decision::Error::InvalidParameter { .. } => exit::INVALID_VALUE,
                _ => exit::RUNTIME,
            },
        }
    }
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    /// Malformed command line; reported by clap.
    pub const USAGE: i32 = 2;
    pub const UNKNOWN_AGENT: i32 = 3;
    pub const INVALID_VALUE: i32 = 4;
    pub const MISSING_FILE: i32 = 5;
    pub const INCOMPATIBLE: i32 = 6;
    pub const IO: i32 = 7;
    pub const REPLAY_MISMATCH: i32 = 8;
}

#[derive(Debug, Parser)]
#[command(name = "split-decision", version, about = "Run split-reward agents on bandit, MDP, IGT and PacMan tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write results, curves and a replay manifest.
    Run(RunArgs),
    /// Re-run cells recorded in a manifest and check they match bit for bit.
    Replay(ReplayArgs),
    /// Print every agent name with its nominal parameters.
    ListAgents,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mab, mdp, igt or pacman.
    #[arg(long)]
    pub task: Option<String>,
    /// Comma-separated agent names, e.g. `b-HBTS,TS,UCB`.
    #[arg(long)]
    pub agents: Option<String>,
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Episodes per run.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Master seed; falls back to SPLIT_DECISION_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// IGT payoff scheme (1 or 2).
    #[arg(long)]
    pub scheme: Option<u8>,
    /// PacMan reward regime: stationary, muting, scaling or flipping.
    #[arg(long)]
    pub stationarity: Option<String>,
    /// PacMan episodes per stationarity batch.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// PacMan frame cap per episode.
    #[arg(long)]
    pub max_frames: Option<usize>,
    /// Draw profile parameters with population jitter (true or false).
    #[arg(long)]
    pub jitter: Option<bool>,
    /// Discount for the tabular agents.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Exploration rate for the epsilon-greedy agents.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

impl RunArgs {
    pub fn overrides(&self) -> Result<Overrides, CliError> {
        Ok(Overrides {
            task: self.task.as_deref().map(TaskKind::parse).transpose()?,
            agents: self.agents.as_deref().map(config::split_list),
            scenarios: self.scenarios,
            repeats: self.repeats,
            horizon: self.horizon,
            seed: self.seed,
            scheme: self.scheme,
            stationarity: self.stationarity.as_deref().map(config::parse_stationarity).transpose()?,
            batch_size: self.batch_size,
            max_frames: self.max_frames,
            jitter: self.jitter,
            gamma: self.gamma,
            epsilon: self.epsilon,
            jobs: self.jobs,
            out: self.out.clone(),
            format: self.format.as_deref().map(Format::parse).transpose()?,
        })
    }

    /// Flags, then the config file, then the seed variable, then defaults.
    pub fn resolve(&self, env_seed: Option<&str>) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        ExperimentConfig::resolve(self.overrides()?.over(file), env_seed)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// manifest.json written by `run`.
    pub manifest: PathBuf,
    #[arg(long)]
    pub agent: Option<String>,
    #[arg(long)]
    pub scenario: Option<usize>,
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Also write the replayed cells to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing human-readable progress to `log`.
pub fn execute(cli: Cli, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let env_seed = std::env::var(config::SEED_ENV).ok();
            let cfg = args.resolve(env_seed.as_deref())?;
            let summary = output::run_and_write(&cfg)?;
            writeln!(
                log,
                "{} runs over {} scenario(s) written to {}",
                summary.runs,
                cfg.scenarios,
                cfg.out.display()
            )
            .map_err(|e| CliError::io("<stdout>", e))
        }
        Command::Replay(args) => {
            let checked = replay::replay(&args)?;
            writeln!(log, "{checked} cell(s) replayed exactly").map_err(|e| CliError::io("<stdout>", e))
        }
        Command::ListAgents => {
            write!(log, "{}", list_agents()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// One line per split agent with its nominal `(lambda+, w+, lambda-, w-)`,
/// marked `~` when the profile is jittered, then the baselines.
pub fn list_agents() -> String {
    use split_decision::agents::{Baseline, Pool};
    use split_decision::{AgentSpec, BehaviorProfile};

    let mut out = String::new();
    for pool in Pool::ALL {
        out.push_str(&format!("{}:\n", pool.label()));
        for profile in BehaviorProfile::ALL {
            let p = profile.nominal();
            let name = AgentSpec::split(pool, profile).name();
            let mark = if profile.has_jitter() { " ~" } else { "" };
            out.push_str(&format!(
                "  {name:<14} ({}, {}, {}, {}){mark}\n",
                p.lambda_plus, p.w_plus, p.lambda_minus, p.w_minus
            ));
        }
        let baselines: Vec<&str> = Baseline::ALL.iter().filter(|b| b.pool() == pool).map(|b| b.name()).collect();
        out.push_str(&format!("  baselines: {}\n", baselines.join(", ")));
    }
    out.push_str("~ parameters are jittered per agent unless --jitter false\n");
    out
}
