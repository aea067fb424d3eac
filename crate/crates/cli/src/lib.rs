//! Command-line front end: ray traces, inverse design, parameter sweeps,
//! perturbation scans and a self-check.

mod check;
mod config;
mod design;
mod error;
mod perturb;
mod svg;
mod sweep;
mod trace;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "lighttrap",
    version,
    about = "Ray tracing and design of gradient-index light traps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps and scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one ray and summarize its orbit.
    Trace,
    /// Choose a Gaussian profile for target turning radii.
    Design,
    /// Tabulate orbits over a grid of profiles or impact invariants.
    Sweep,
    /// Scan perturbation amplitudes and measure orbit deviation.
    Perturb,
    /// Run the built-in invariant suites.
    Check {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn require(config: &Option<PathBuf>) -> CliResult<&Path> {
    config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Trace => trace::run(require(&cli.config)?, &cli.out, cli.seed),
        Command::Design => design::run(require(&cli.config)?, &cli.out),
        Command::Sweep => sweep::run(require(&cli.config)?, &cli.out, cli.seed),
        Command::Perturb => perturb::run(require(&cli.config)?, &cli.out, cli.seed),
        Command::Check { inject_fault } => check::run(&cli.out, *inject_fault),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("lighttrap: config error: --jobs must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("lighttrap: {e}");
            return 4;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lighttrap: {e}");
            e.exit_code() as u8
        }
    }
}
