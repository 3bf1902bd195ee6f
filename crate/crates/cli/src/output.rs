//! Running an experiment and writing its outputs.
//!
//! Every file is a pure function of the resolved configuration: no
//! timestamps, no thread-dependent ordering, floats printed in their
//! shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use split_decision::env::EnvSpec;
use split_decision::eval::{
    average_wins, for_each_scenario, pairwise_wins, CurveAccumulator, Experiment, LearningCurve, PairwiseMatrix,
};
use split_decision::rng::StreamId;
use split_decision::RunResult;

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Everything needed to rebuild and check every cell of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Resolved configuration, minus the output directory.
    pub config: Value,
    pub experiment: Experiment,
    pub num_actions: usize,
    pub context_dim: usize,
    pub scenarios: Vec<EnvSpec>,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub agent: String,
    pub scenario: usize,
    pub repeat: usize,
    pub env_stream: StreamId,
    pub agent_stream: StreamId,
    pub final_reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<(bool, bool)>>,
}

impl CellRecord {
    pub fn from_run(r: &RunResult) -> Self {
        Self {
            agent: r.agent.clone(),
            scenario: r.scenario,
            repeat: r.repeat,
            env_stream: r.cell.env_stream,
            agent_stream: r.cell.agent_stream,
            final_reward: r.final_reward,
            events: r.events.clone(),
        }
    }
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, exp: &Experiment, runs: &[RunResult]) -> Result<Self, CliError> {
        let scenarios = exp.scenario_specs();
        let probe = scenarios[0].build(StreamId::new(exp.seed, 0));
        let mut config = serde_json::to_value(cfg).map_err(|e| CliError::invalid("config", e.to_string()))?;
        if let Value::Object(map) = &mut config {
            map.remove("out");
        }
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            experiment: exp.clone(),
            num_actions: probe.num_actions(),
            context_dim: probe.context_spec().dim(),
            scenarios,
            cells: runs.iter().map(CellRecord::from_run).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid("manifest", format!("{}: {e}", path.display())))
    }
}

pub struct Summary {
    pub runs: usize,
    pub files: Vec<PathBuf>,
}

/// Runs the experiment described by `cfg` and writes its outputs. On
/// failure, files written so far are removed.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let exp = cfg.experiment()?;
    let mut acc = CurveAccumulator::new();
    let mut runs: Vec<RunResult> = Vec::new();
    for_each_scenario(&exp, cfg.jobs, |batch: Vec<RunResult>| -> Result<(), CliError> {
        for r in &batch {
            acc.add(r);
            runs.push(r.summary());
        }
        Ok(())
    })?;

    let mut writer = OutputDir::create(&cfg.out)?;
    let result = write_all(&mut writer, cfg, &exp, &runs, &acc.finish());
    match result {
        Ok(()) => Ok(Summary {
            runs: runs.len(),
            files: writer.commit(),
        }),
        Err(e) => {
            writer.rollback();
            Err(e)
        }
    }
}

fn write_all(
    out: &mut OutputDir,
    cfg: &ExperimentConfig,
    exp: &Experiment,
    runs: &[RunResult],
    curves: &[LearningCurve],
) -> Result<(), CliError> {
    let pairwise = pairwise_wins(runs)?;
    let averages = if pairwise.agents.len() >= 2 {
        Some(average_wins(&pairwise)?)
    } else {
        None
    };
    let manifest = Manifest::new(cfg, exp, runs)?;
    out.write("config.json", &to_json(cfg)?)?;
    out.write(MANIFEST, &to_json(&manifest)?)?;
    match cfg.format {
        Format::Csv => {
            out.write("results.csv", &results_csv(exp.seed, runs)?)?;
            out.write("curves.csv", &curves_csv(curves)?)?;
            out.write("pairwise.csv", &pairwise_csv(&pairwise)?)?;
            if let Some(avg) = &averages {
                out.write("average_wins.csv", &average_wins_csv(&pairwise.agents, avg)?)?;
            }
        }
        Format::Json => {
            let records: Vec<CellRecord> = runs.iter().map(CellRecord::from_run).collect();
            out.write("results.json", &to_json(&records)?)?;
            out.write("curves.json", &to_json(curves)?)?;
            out.write("pairwise.json", &to_json(&pairwise)?)?;
            if let Some(avg) = &averages {
                let rows: Vec<(&String, f64)> = pairwise.agents.iter().zip(avg.iter().copied()).collect();
                out.write("average_wins.json", &to_json(&rows)?)?;
            }
        }
    }
    Ok(())
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::invalid("output", e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::invalid("output", e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::invalid("output", e.to_string()))
}

pub fn results_csv(seed: u64, runs: &[RunResult]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["agent", "scenario", "repeat", "seed", "env_stream", "agent_stream", "final_reward"],
        runs.iter().map(|r| {
            vec![
                r.agent.clone(),
                r.scenario.to_string(),
                r.repeat.to_string(),
                seed.to_string(),
                r.cell.env_stream.stream.to_string(),
                r.cell.agent_stream.stream.to_string(),
                r.final_reward.to_string(),
            ]
        }),
    )
}

pub fn curves_csv(curves: &[LearningCurve]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["agent", "step", "metric", "mean", "se"],
        curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    c.agent.clone(),
                    p.step.to_string(),
                    c.metric.name().to_string(),
                    p.mean.to_string(),
                    p.se.to_string(),
                ]
            })
        }),
    )
}

pub fn pairwise_csv(m: &PairwiseMatrix) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["agent_i", "agent_j", "wins_i", "wins_j", "ties"],
        m.pairs().into_iter().map(|(i, j, wi, wj, t)| {
            vec![
                m.agents[i].clone(),
                m.agents[j].clone(),
                wi.to_string(),
                wj.to_string(),
                t.to_string(),
            ]
        }),
    )
}

pub fn average_wins_csv(agents: &[String], avg: &[f64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["agent", "average_wins"],
        agents.iter().zip(avg).map(|(a, v)| vec![a.clone(), v.to_string()]),
    )
}

/// Tracks files written into an output directory so a failed run leaves
/// nothing half-written behind.
pub struct OutputDir {
    root: PathBuf,
    created_root: bool,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            created_root,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    }

    pub fn commit(self) -> Vec<PathBuf> {
        self.written
    }

    pub fn rollback(self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}
