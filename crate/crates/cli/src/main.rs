use std::process::ExitCode;

use clap::Parser;

use intermingle_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match intermingle_cli::run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("intermingle: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
