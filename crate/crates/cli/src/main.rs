#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod dataset;
mod scene;

use config::RunConfig;

/// A bad invocation or configuration; exits 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Inputs that parse but cannot be analyzed; exits 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

#[derive(Parser)]
#[command(
    name = "filamap",
    version,
    about = "SAR surface-contrast filaments and their dependence on wind"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SceneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Process one scene; all scenes when omitted.
    #[arg(long)]
    scene: Option<String>,
}

#[derive(Args)]
struct AdjustArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Wind-adjustment exponent.
    #[arg(long, allow_negative_numbers = true)]
    xstar: Option<f64>,
}

#[derive(Args)]
struct BinArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Wind-adjust the contrasts before extraction.
    #[arg(long, allow_negative_numbers = true)]
    xstar: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for the generated dataset.
    #[arg(long)]
    out: PathBuf,
    /// Generator parameters (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the resolution pyramid of each scene.
    Pyramid(SceneArgs),
    /// Write the three bracket contrasts of each scene.
    Contrast(SceneArgs),
    /// Extract filaments, optionally on wind-adjusted contrasts.
    Filaments(AdjustArgs),
    /// Write wind-adjusted bracket contrasts.
    Adjust(AdjustArgs),
    /// Deduplicate sightings and match them to scenes.
    Collocate(RunArgs),
    /// Build the hourly paired contrast/wind series per domain.
    Bin(BinArgs),
    /// Sweep wind exponents and decompose the correlations.
    Analyze(RunArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

fn load(run: &RunArgs) -> Result<RunConfig> {
    RunConfig::load(&run.config, run.out.as_deref()).map_err(|e| UsageError(format!("{e:#}")).into())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pyramid(a) => commands::pyramid(&load(&a.run)?, a.scene.as_deref()),
        Command::Contrast(a) => commands::contrast(&load(&a.run)?, a.scene.as_deref()),
        Command::Filaments(a) => commands::filaments(&load(&a.scene.run)?, a.scene.scene.as_deref(), a.xstar),
        Command::Adjust(a) => commands::adjust(&load(&a.scene.run)?, a.scene.scene.as_deref(), a.xstar),
        Command::Collocate(a) => commands::collocate(&load(&a)?),
        Command::Bin(a) => commands::bin(&load(&a.run)?, a.xstar),
        Command::Analyze(a) => commands::analyze(&load(&a)?),
        Command::Synth(a) => {
            let spec = dataset::load_spec(a.config.as_deref(), a.seed).map_err(|e| UsageError(format!("{e:#}")))?;
            dataset::generate(&spec, &a.out)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(fe) = e.chain().find_map(|c| c.downcast_ref::<filamap::Error>()) {
        return if fe.is_data_error() { 2 } else { 1 };
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR\t{first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR\t{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
