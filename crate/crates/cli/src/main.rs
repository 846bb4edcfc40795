use std::process::ExitCode;

use clap::Parser;

use bsde_cli::{execute, write_report, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command).and_then(|(cfg, report)| write_report(&cfg, &report)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bsde: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
