use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mottlab_cli::run(std::env::args_os()))
}
