use std::process::ExitCode;

use clap::Parser;
use platoon_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("platoon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
