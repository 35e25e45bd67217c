//! `perclab`: percolation experiments from the command line.
//!
//! Exit status is 0 on success (including statistical checks that fail,
//! which are reported in the output), 2 on configuration errors and 3 when
//! a numerical procedure does not converge.

mod args;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perclab::error::Error;
use serde_json::json;

use args::{Command, ExperimentConfig, DEFAULT_SEED};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "perclab", version, about = "Percolation experiments on periodic plane lattices")]
struct Cli {
    /// Master seed; every replica stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (all cores by default). Results do not depend on it.
    #[arg(long, global = true, env = "PERCLAB_JOBS")]
    jobs: Option<usize>,
    /// Write `<command>.json` and `<command>.csv` here.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run an experiment described by a TOML file.
    Run { config: PathBuf },
    #[command(flatten)]
    Experiment(Command),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("perclab: error: {msg}");
    ExitCode::from(code)
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_outputs(dir: &Path, name: &str, json: &str, csv: &[u8]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.json")), json)?;
    fs::write(dir.join(format!("{name}.csv")), csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match cli.action {
        Action::Run { config } => match load_config(&config) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_CONFIG, e),
        },
        Action::Experiment(command) => ExperimentConfig { seed: DEFAULT_SEED, out_dir: None, command },
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.out_dir.is_some() {
        config.out_dir = cli.out_dir;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return fail(EXIT_CONFIG, "--jobs must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return fail(EXIT_CONFIG, e);
        }
    }

    let outcome = match run::run(&config.command, config.seed) {
        Ok(o) => o,
        Err(e @ (Error::NonConvergence(_) | Error::NoCrossing { .. })) => return fail(EXIT_NONCONVERGENCE, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let name = config.command.name();
    let summary = json!({
        "schema": SCHEMA,
        "command": name,
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "converged": outcome.unconverged.is_none(),
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    print!("{text}");
    if let Some(dir) = &config.out_dir {
        if let Err(e) = write_outputs(dir, name, &text, &outcome.csv) {
            return fail(EXIT_CONFIG, format!("{}: {e}", dir.display()));
        }
        eprintln!("perclab: wrote {name}.json and {name}.csv to {}", dir.display());
    }
    match outcome.unconverged {
        Some(msg) => fail(EXIT_NONCONVERGENCE, msg),
        None => ExitCode::SUCCESS,
    }
}
