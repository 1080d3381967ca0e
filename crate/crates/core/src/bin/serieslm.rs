use std::process::ExitCode;

fn main() -> ExitCode {
    serieslm::cli::main_from_args(std::env::args_os())
}
