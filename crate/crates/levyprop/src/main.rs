use std::process::ExitCode;

fn main() -> ExitCode {
    levyprop::cli::main_with(std::env::args_os())
}
