use std::process::ExitCode;

fn main() -> ExitCode {
    nqs_bell_cli::main_with(std::env::args_os())
}
