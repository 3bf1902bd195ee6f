use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use split_decision_cli::{execute, exit, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout).context("split-decision failed") {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(exit::RUNTIME, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
