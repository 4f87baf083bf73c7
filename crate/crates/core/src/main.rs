use std::process::ExitCode;

fn main() -> ExitCode {
    phasesplit::cli::run_from(std::env::args_os())
}
