//! `netcover`: command-line front end for device placement on pipeline
//! networks.

mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::{Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if matches!(err, CliError::Usage(_)) {
                eprintln!("run `netcover --help` for usage");
            }
            ExitCode::from(err.exit_code())
        }
    }
}
