use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = amrq::cli::Cli::parse();
    match amrq::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
