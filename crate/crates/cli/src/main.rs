use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lighttrap::run(std::env::args_os()))
}
