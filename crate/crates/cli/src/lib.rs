//! `hetdiff`: solves, sweeps and random walks for diffusion across an
//! interface with contrast `eps` and exponent `q`, written as CSV or JSON
//! tables with a run manifest.

pub mod commands;
pub mod error;
pub mod expr;
pub mod init;
pub mod output;
pub mod table;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::{Run, SolveArgs, SweepArgs, WalkArgs};
use crate::error::{CliError, Result};
use crate::output::{OutputArgs, RunManifest};

/// Environment variable capping the number of worker threads.
const THREADS_VAR: &str = "HETDIFF_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hetdiff",
    version,
    about = "Diffusion across a contrast interface: closed form, finite volumes and random walks",
    after_help = "Exit codes: 0 success, 2 usage, 3 numerical failure, 4 I/O.\n\
                  HETDIFF_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solution snapshots at one or more times.
    Solve {
        #[command(flatten)]
        args: SolveArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Interface observable against eps, with power-law fits.
    Sweep {
        #[command(flatten)]
        args: SweepArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Random-walk density histogram compared with the closed form.
    Walk {
        #[command(flatten)]
        args: WalkArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-run the command recorded in a manifest and check the table digest.
    Replay {
        /// A PREFIX.manifest.json file, or a JSON output holding a manifest.
        manifest: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Walk { .. } => "walk",
            Command::Replay { .. } => "replay",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::Solve { out, .. } | Command::Sweep { out, .. } | Command::Walk { out, .. } | Command::Replay { out, .. } => out,
        }
    }

    fn compute(&self) -> Result<Run> {
        match self {
            Command::Solve { args, .. } => commands::solve(args),
            Command::Sweep { args, .. } => commands::sweep(args),
            Command::Walk { args, .. } => commands::walk(args),
            Command::Replay { .. } => unreachable!("replay is handled separately"),
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

/// Runs a parsed command and writes its outputs; `argv` excludes the program name.
fn execute(command: &Command, argv: Vec<String>) -> Result<RunManifest> {
    let start = Instant::now();
    let run = command.compute()?;
    output::emit(command.name(), argv, run, command.output(), start)
}

fn replay(path: &PathBuf, out: &OutputArgs) -> Result<()> {
    let recorded = output::read_manifest(path)?;
    let cli = Cli::try_parse_from(std::iter::once("hetdiff".to_string()).chain(recorded.argv.iter().cloned()))
        .map_err(|e| CliError::Usage(format!("manifest command does not parse: {e}")))?;
    let mut command = cli.command;
    match &mut command {
        Command::Solve { out: o, .. } | Command::Sweep { out: o, .. } | Command::Walk { out: o, .. } => *o = out.clone(),
        Command::Replay { .. } => return Err(CliError::Usage("a manifest cannot record a replay".into())),
    }
    let fresh = execute(&command, recorded.argv.clone())?;
    if fresh.table_sha256 != recorded.table_sha256 {
        return Err(CliError::Numerical(format!(
            "replayed table digest {} differs from recorded {}",
            fresh.table_sha256, recorded.table_sha256
        )));
    }
    eprintln!("replay matches: table sha256 {}", fresh.table_sha256);
    Ok(())
}

/// Parses the process arguments, runs the command and maps errors to exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Replay { manifest, out } => replay(manifest, out),
        command => execute(command, std::env::args().skip(1).collect()).map(|_| ()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetdiff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
