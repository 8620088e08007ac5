use std::process::ExitCode;

use amcd_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    match amcd_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
