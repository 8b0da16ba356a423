mod cache;
mod config;
mod error;
mod workflows;

use clap::{Args, Parser, Subcommand};
use config::{RunConfig, Workflow};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Bogoliubov predictions and exact-diagonalization checks for bosons on
/// the unit torus.
#[derive(Parser)]
#[command(name = "bogobind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form Bogoliubov quantities and energy predictions.
    Eval(Common),
    /// Binding energy from exact diagonalization.
    Ed(Common),
    /// N-sweep of the binding energy against the prediction.
    Study(Common),
    /// Run the invariant suite; exits 4 on any violation.
    Selfcheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Cache directory (overrides CACHE_DIR).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(verb: Workflow, args: Common) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let config = RunConfig::load(&args.config)?;
    let cache_dir = args.cache.or_else(|| std::env::var_os("CACHE_DIR").map(PathBuf::from));
    let cache = cache_dir.map(|d| cache::Cache::open(&d)).transpose()?;
    let ctx = workflows::Context { out: &args.out, cache };
    workflows::run(verb, &config, &ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match cli.command {
        Command::Eval(a) => (Workflow::Eval, a),
        Command::Ed(a) => (Workflow::Ed, a),
        Command::Study(a) => (Workflow::Study, a),
        Command::Selfcheck(a) => (Workflow::Selfcheck, a),
    };
    match execute(verb, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
