use std::process::ExitCode;

use bizsched_cli::args::Cli;
use bizsched_cli::commands;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
