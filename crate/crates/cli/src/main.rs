use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multicause::harness::{self, Experiment, ExperimentConfig, HarnessError};

/// Run the multiple-causes experiments from a TOML config.
#[derive(Parser)]
#[command(name = "multicause", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the latent scaling factor of the linear-Gaussian model.
    LinearIgnorance(RunArgs),
    /// Ignorance interval of P(Y = 1 | do(a)) for every number of active causes.
    BinaryIgnorance(RunArgs),
    /// Penalized maximum-likelihood fits with and without proxies.
    Estimate(RunArgs),
    /// Misclassification of the latent class and projection clouds.
    Positivity(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (experiment, args) = match cli.command {
        Command::LinearIgnorance(a) => (Experiment::LinearIgnorance, a),
        Command::BinaryIgnorance(a) => (Experiment::BinaryIgnorance, a),
        Command::Estimate(a) => (Experiment::Estimate, a),
        Command::Positivity(a) => (Experiment::Positivity, a),
    };
    let config = ExperimentConfig::load(&args.config)?;
    let out = args
        .out
        .or_else(|| config.out.clone())
        .ok_or_else(|| HarnessError::Config("no output directory: pass --out or set `out` in the config".into()))?;
    let manifest = harness::run(experiment, &config, &out)?;
    for entry in &manifest.outputs {
        println!("{}  {}", entry.sha256, out.join(&entry.file).display());
    }
    println!("wrote {} ({:.2}s)", out.join(harness::MANIFEST_FILE).display(), manifest.wall_time_seconds);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
