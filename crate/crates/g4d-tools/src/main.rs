//! `g4d` command-line driver.
//!
//! Every subcommand reads the same flat config file. The path comes from
//! `--config`, falling back to the `G4D_CONFIG` environment variable, then
//! to `./g4d.conf`. Exit codes: 0 success, 2 config error, 3 I/O error,
//! 4 validation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use g4d_tools::config::PipelineConfig;
use g4d_tools::pipeline::{run, Command};

#[derive(Parser)]
#[command(
    name = "g4d",
    about = "Compression pipeline for 4D Gaussian scenes: scoring-based pruning, \
             key-frame temporal filtering, SH vector quantization and a deterministic \
             CPU renderer to verify it all"
)]
struct Cli {
    /// Config file (flat `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Generate a synthetic scene into paths.scene.
    Generate,
    /// Render every frame of paths.scene from the configured view.
    Render,
    /// Compute spatial-temporal variation scores for paths.scene.
    Score,
    /// Prune paths.scene by the configured ratio using the scores file.
    Prune,
    /// Build key-frame visibility masks for the pruned scene.
    BuildFilter,
    /// Render the pruned scene through the key-frame filter.
    RenderFiltered,
    /// Vector-quantize SH and report storage sizes.
    Compress,
    /// Emit redundancy-study CSVs (temporal variance histogram, active
    /// ratio, activation IoU).
    Analyze,
    /// Measure render timings, filter speedup and pruning quality.
    Bench,
    /// Import a PLY checkpoint through a property-name mapping file.
    Import,
}

impl From<&CliCommand> for Command {
    fn from(c: &CliCommand) -> Command {
        match c {
            CliCommand::Generate => Command::Generate,
            CliCommand::Render => Command::Render,
            CliCommand::Score => Command::Score,
            CliCommand::Prune => Command::Prune,
            CliCommand::BuildFilter => Command::BuildFilter,
            CliCommand::RenderFiltered => Command::RenderFiltered,
            CliCommand::Compress => Command::Compress,
            CliCommand::Analyze => Command::Analyze,
            CliCommand::Bench => Command::Bench,
            CliCommand::Import => Command::Import,
        }
    }
}

fn config_path(cli: &Cli) -> PathBuf {
    if let Some(p) = &cli.config {
        return p.clone();
    }
    if let Ok(p) = std::env::var("G4D_CONFIG") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("g4d.conf")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = config_path(&cli);
    let config = match PipelineConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("g4d: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(Command::from(&cli.command), &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("g4d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
