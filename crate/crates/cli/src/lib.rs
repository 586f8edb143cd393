//! Library side of the `drci` command: CSV loading, configuration, reports
//! and command dispatch.

pub mod cli;
pub mod commands;
pub mod config;
pub mod input;
pub mod report;

pub use commands::{run, sweep, write_atomic, Output};
pub use config::{Command, Overrides, RunConfig};
pub use input::{load_csv, ColumnMap};
pub use report::Report;

/// Runs a parsed command line and returns the process exit code: 0 when the
/// bound is optimal (or for sweep/simulate), 2 when infeasible, 1 on error.
pub fn main_with(args: cli::Args) -> i32 {
    match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(args: cli::Args) -> anyhow::Result<i32> {
    let config = RunConfig::resolve(args.command, args.config.as_deref(), args.overrides())?;
    let output = run(&config)?;
    let text = output.render();
    match &config.output {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    Ok(output.exit_code())
}
