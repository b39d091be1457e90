use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = doifbp::app::Cli::parse();
    ExitCode::from(doifbp::app::execute(cli))
}
