use std::process::ExitCode;

fn main() -> ExitCode {
    disagreement::pipeline::main_with_args(std::env::args_os())
}
