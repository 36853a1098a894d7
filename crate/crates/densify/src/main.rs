use std::process::ExitCode;

fn main() -> ExitCode {
    densify::cli::main_with_args(std::env::args_os())
}
