//! The `lighttrap` command line, built inside this package so the
//! acceptance suite can run it as a child process.

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lighttrap::run(std::env::args_os()))
}
