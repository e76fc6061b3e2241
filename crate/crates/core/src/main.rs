use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    degctl::cli::main_with(degctl::cli::Cli::parse())
}
