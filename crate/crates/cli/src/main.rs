use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use magiclab_cli::{run, CliError, Command};

#[derive(Debug, Parser)]
#[command(
    name = "magiclab",
    version,
    about = "Stabilizer Rényi entropies, magic capacity and mutual magic"
)]
struct Args {
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(args.command, &args.config, args.seed, &args.out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e))
        }
    }
}
