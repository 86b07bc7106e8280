//! `dynav`: benchmark runs, world and episode generation, memory graph
//! tools, the protocol stub and log evaluation.

mod config;
mod error;
mod run;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunFlags;
use error::CliError;

#[derive(Parser)]
#[command(name = "dynav", version, about = "Object-goal navigation with dynamic polar actions and graph memory")]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG overrides
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write step logs, results and a report
    Run(RunFlags),
    /// Generate a world file
    Worldgen {
        #[arg(long)]
        seed: u64,
        /// Worldgen spec (JSON); defaults apply to missing keys
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        rooms: Option<usize>,
        #[arg(long)]
        hazards: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an episode spec file over generated worlds
    GenEpisodes {
        #[arg(long, short = 'n')]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Two goals per episode instead of one
        #[arg(long)]
        two_goal: bool,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        max_distance: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Memory graph files
    #[command(subcommand)]
    Memory(MemoryCmd),
    /// Serve scripted `dynav/1` responses until interrupted
    ServeStub {
        #[arg(long, default_value_t = 0)]
        port: u16,
        #[arg(long)]
        script: PathBuf,
    },
    /// Recompute results and the report from step logs or a results file
    Eval {
        /// Step log (JSONL) written by `run`
        #[arg(long, conflicts_with = "results", requires = "episodes")]
        logs: Option<PathBuf>,
        /// Episode specs the logs were produced from
        #[arg(long)]
        episodes: Option<PathBuf>,
        /// Replaces the world of every episode, as in `run`
        #[arg(long)]
        world: Option<PathBuf>,
        /// results.json written by `run`
        #[arg(long, required_unless_present = "logs")]
        results: Option<PathBuf>,
        /// Run config the logs came from (body and sensor settings)
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum MemoryCmd {
    /// Re-emit a graph in the file schema, or as relation text
    Export {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        text: bool,
    },
    /// Merge graphs into one
    Merge {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a graph as relation text
    Show {
        input: PathBuf,
        /// Max clauses
        #[arg(long, default_value_t = usize::MAX)]
        budget: usize,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(flags) => run::cmd_run(&flags),
        Command::Worldgen { seed, spec, rooms, hazards, out } => tools::cmd_worldgen(seed, spec.as_deref(), rooms, hazards, &out),
        Command::GenEpisodes { count, seed, two_goal, spec, max_steps, max_distance, out } => {
            tools::cmd_gen_episodes(count, seed, two_goal, spec.as_deref(), max_steps, max_distance, &out)
        }
        Command::Memory(m) => tools::cmd_memory(m),
        Command::ServeStub { port, script } => tools::cmd_serve_stub(port, &script),
        Command::Eval { logs, episodes, world, results, config, out } => run::cmd_eval(
            run::EvalInput { logs, episodes, world, results, config },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage errors are config errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynav: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
