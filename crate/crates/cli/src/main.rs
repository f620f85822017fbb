//! Command-line front end: scenario configs in, deterministic CSV/JSON out.

mod commands;
mod config;
mod error;
mod fields;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_design, cmd_efficiency, cmd_replay, cmd_scores, cmd_sequential};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "targdes",
    version,
    about = "Targeted spatial measurement designs for Gaussian-field meta-models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a design: greedy start plus exchange refinement
    Design(RunArgs),
    /// Run a sequential measurement campaign against a ground truth
    Sequential(RunArgs),
    /// Compare design efficiencies against the restart reference design
    Efficiency(RunArgs),
    /// Score an estimated field against an actual field
    Scores(ScoresCliArgs),
    /// Re-run a recorded manifest into a fresh output directory
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Override the config's search seed
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated criterion sweep, e.g. mc_ls,ic_ls,mc_w,ic_w
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<String>>,
}

#[derive(Args)]
struct ScoresCliArgs {
    /// Grid side length N
    #[arg(long)]
    grid: usize,
    /// Level-set threshold T
    #[arg(long)]
    threshold: f64,
    /// Actual field (CSV: index,x1,x2,value)
    #[arg(long)]
    actual: PathBuf,
    /// Estimated field (CSV: index,x1,x2,value)
    #[arg(long)]
    estimated: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest of a previous run
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design(args) => cmd_design(&args.into()),
        Command::Sequential(args) => cmd_sequential(&args.into()),
        Command::Efficiency(args) => cmd_efficiency(&args.into()),
        Command::Scores(args) => cmd_scores(&commands::ScoresArgs {
            grid: args.grid,
            threshold: args.threshold,
            actual: args.actual,
            estimated: args.estimated,
            out: args.out,
        }),
        Command::Replay(args) => cmd_replay(&args.manifest, &args.out),
    }
}

impl From<RunArgs> for commands::RunArgs {
    fn from(args: RunArgs) -> commands::RunArgs {
        commands::RunArgs {
            config: args.config,
            out: args.out,
            seed: args.seed,
            criteria: args.criteria,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("targdes: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
