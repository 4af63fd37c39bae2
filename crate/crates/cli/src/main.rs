use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(thzra_cli::run(std::env::args_os()))
}
