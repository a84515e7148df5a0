//! `wisprkit` command-line front end.

mod failure;
mod manifest;
mod paths;
mod plan;
mod sim;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::failure::Failure;

#[derive(Parser)]
#[command(name = "wisprkit", version, about = "Multipath WISP planning, analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price fitting and topology redesign.
    #[command(subcommand)]
    Plan(plan::PlanCommand),
    /// Path-count CDFs before and after link augmentation.
    Paths(paths::PathsArgs),
    /// Run a simulation experiment file.
    Sim(sim::SimArgs),
    /// Build a topology from site coordinates.
    Synthesize(synth::SynthArgs),
}

/// Options every command accepts.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON file whose keys mirror the long flags (snake_case); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("WISPRKIT_LOG", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result: Result<(), Failure> = match cli.command {
        Command::Plan(cmd) => plan::run(cmd),
        Command::Paths(args) => paths::run(args),
        Command::Sim(args) => sim::run(args),
        Command::Synthesize(args) => synth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
