//! Re-running recorded cells from a manifest.

use split_decision::eval::run_cell;
use split_decision::RunResult;

use crate::output::{results_csv, CellRecord, Manifest, OutputDir};
use crate::{CliError, ReplayArgs};

/// Replays the selected cells and returns how many were checked. Any
/// difference from the manifest, down to the last bit of a reward, is an
/// error.
pub fn replay(args: &ReplayArgs) -> Result<usize, CliError> {
    let manifest = Manifest::load(&args.manifest)?;
    let exp = &manifest.experiment;
    if exp.scenario_specs() != manifest.scenarios {
        return Err(CliError::ReplayMismatch(
            "scenario environments regenerated from the seed differ from the manifest".into(),
        ));
    }
    if let Some(agent) = &args.agent {
        if !exp.agents.iter().any(|a| &a.name() == agent) {
            return Err(CliError::UnknownAgent(agent.clone()));
        }
    }
    let selected: Vec<&CellRecord> = manifest
        .cells
        .iter()
        .filter(|c| args.agent.as_ref().is_none_or(|a| &c.agent == a))
        .filter(|c| args.scenario.is_none_or(|s| c.scenario == s))
        .filter(|c| args.repeat.is_none_or(|r| c.repeat == r))
        .collect();
    if selected.is_empty() {
        return Err(CliError::invalid("cell", "no recorded cell matches the selection"));
    }

    let mut replayed: Vec<RunResult> = Vec::with_capacity(selected.len());
    for record in selected {
        let spec = exp
            .agents
            .iter()
            .find(|a| a.name() == record.agent)
            .ok_or_else(|| CliError::ReplayMismatch(format!("agent `{}` is not part of the experiment", record.agent)))?;
        let env = manifest.scenarios.get(record.scenario).ok_or_else(|| {
            CliError::ReplayMismatch(format!("scenario {} is not part of the experiment", record.scenario))
        })?;
        let cell = exp.cell(record.scenario, record.repeat, spec);
        let run = run_cell(env, spec, &exp.settings, exp.horizon, cell)?;
        let got = CellRecord::from_run(&run);
        if got.env_stream != record.env_stream || got.agent_stream != record.agent_stream {
            return Err(CliError::ReplayMismatch(format!("{}: seeds differ", describe(record))));
        }
        if got.final_reward.to_bits() != record.final_reward.to_bits() {
            return Err(CliError::ReplayMismatch(format!(
                "{}: final reward {} but the manifest records {}",
                describe(record),
                got.final_reward,
                record.final_reward
            )));
        }
        if got.events != record.events {
            return Err(CliError::ReplayMismatch(format!("{}: event log differs", describe(record))));
        }
        replayed.push(run.summary());
    }

    if let Some(dir) = &args.out {
        let mut out = OutputDir::create(dir)?;
        if let Err(e) = out.write("replay.csv", &results_csv(exp.seed, &replayed)?) {
            out.rollback();
            return Err(e);
        }
    }
    Ok(replayed.len())
}

fn describe(c: &CellRecord) -> String {
    format!("agent {} scenario {} repeat {}", c.agent, c.scenario, c.repeat)
}
