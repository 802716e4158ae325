mod commands;
mod config;
mod dataset;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Globals;

/// Sampling-based GNN training laboratory.
#[derive(Parser)]
#[command(name = "gnnlab", version)]
struct Cli {
    /// Override the seed stored in the config (train and gradcheck sections).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Force byte-reproducible output (zeroes wall-clock columns).
    #[arg(long, global = true)]
    deterministic: bool,

    /// Directory for manifests, metrics and reports.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model per the config and write metrics plus a checkpoint.
    Train { config: PathBuf },
    /// Compute neighborhood censuses, optionally sweeping a generator
    /// against a reference distribution.
    Census { config: PathBuf },
    /// Check analytic gradients against central finite differences.
    Gradcheck { config: PathBuf },
    /// Train full-graph and subgraph arms from shared initializations and
    /// report the accuracy gap.
    Compare { config: PathBuf },
    /// Write the configured synthetic dataset to disk.
    Gen { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        out_dir: cli.out,
        seed: cli.seed,
        deterministic: cli.deterministic,
    };
    if let Err(e) = std::fs::create_dir_all(&globals.out_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Train { config } => commands::cmd_train(config, &globals),
        Command::Census { config } => commands::cmd_census(config, &globals),
        Command::Gradcheck { config } => commands::cmd_gradcheck(config, &globals),
        Command::Compare { config } => commands::cmd_compare(config, &globals),
        Command::Gen { config } => commands::cmd_gen(config, &globals),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
