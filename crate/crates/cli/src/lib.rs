//! Experiment driver for the `magiclab` binary: typed JSON configs, state
//! construction, scans and provenance-stamped artifacts.

pub mod bench;
pub mod commands;
pub mod error;
pub mod output;
pub mod scans;
pub mod states;

use std::path::Path;

use clap::ValueEnum;
use serde::de::DeserializeOwned;

pub use error::{CliError, CliResult};
use output::{Artifacts, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Sre,
    Capacity,
    Mutual,
    #[value(name = "mc-i2")]
    McI2,
    Groundstate,
    Cliffordt,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Sre => "sre",
            Command::Capacity => "capacity",
            Command::Mutual => "mutual",
            Command::McI2 => "mc-i2",
            Command::Groundstate => "groundstate",
            Command::Cliffordt => "cliffordt",
            Command::Bench => "bench",
        }
    }
}

fn parse<T: DeserializeOwned>(bytes: &[u8]) -> CliResult<T> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Reads the config, runs `command` and writes its artifacts into `out_dir`.
pub fn run(command: Command, config_path: &Path, seed: u64, out_dir: &Path) -> CliResult<()> {
    let bytes = std::fs::read(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    run_with_bytes(command, &bytes, seed, out_dir)
}

pub fn run_with_bytes(command: Command, bytes: &[u8], seed: u64, out_dir: &Path) -> CliResult<()> {
    let out = Artifacts::create(out_dir, Provenance::new(command.name(), bytes, seed))?;
    match command {
        Command::Spectrum => commands::cmd_spectrum(&parse(bytes)?, seed, &out),
        Command::Sre => commands::cmd_sre(&parse(bytes)?, seed, &out),
        Command::Capacity => commands::cmd_capacity(&parse(bytes)?, seed, &out),
        Command::Mutual => commands::cmd_mutual(&parse(bytes)?, seed, &out),
        Command::McI2 => commands::cmd_mc_i2(&parse(bytes)?, seed, &out),
        Command::Groundstate => {
            let (rows, traces) = scans::ground_scan(&parse(bytes)?, seed)?;
            out.write_csv("ground_scan.csv", &rows)?;
            out.write_json("dmrg_energies.json", &traces)?;
            Ok(())
        }
        Command::Cliffordt => {
            let (rows, summary) = scans::clifford_t_scan(&parse(bytes)?, seed)?;
            out.write_csv("cliffordt_runs.csv", &rows)?;
            out.write_csv("cliffordt_summary.csv", &summary)?;
            Ok(())
        }
        Command::Bench => {
            let report = bench::run_bench(&parse(bytes)?, seed)?;
            out.write_json("bench.json", &report)?;
            Ok(())
        }
    }
}
