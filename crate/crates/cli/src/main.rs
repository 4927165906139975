use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    dicke_cli::app::main_with(dicke_cli::app::Cli::parse())
}
