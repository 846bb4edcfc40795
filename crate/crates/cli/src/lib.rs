//! Library behind the `bsde` binary: flag and config-file resolution, the
//! `run`, `converge` and `oracle` commands, and their CSV output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

pub use args::{Cli, Command, CommonArgs};
pub use config::RunConfig;
pub use error::CliError;
pub use output::Report;

/// Resolves the configuration and runs the command, on a dedicated pool
/// when a thread count is set.
pub fn execute(command: &Command) -> Result<(RunConfig, Report), CliError> {
    let cfg = RunConfig::resolve(command)?;
    let report = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| error::config(format!("cannot start {threads} worker threads: {e}")))?
            .install(|| commands::dispatch(&cfg))?,
        None => commands::dispatch(&cfg)?,
    };
    Ok((cfg, report))
}

/// Writes the CSV to `cfg.out`, or to stdout.
pub fn write_report(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    let bytes = report.to_csv();
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
