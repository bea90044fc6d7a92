use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use trollfarm::cli::{self, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Per-type troll mass, cutoff and support
    Strategy,
    /// Vote shares with trolls off and with the configured variant
    Shares,
    /// Shares along a grid of signal separations
    Sweep,
    /// Informativeness thresholds between regimes
    Regimes,
    /// Search for an electorate polarization that restores aggregation
    Polarize,
    /// Search for a belief distortion that restores aggregation
    Distort,
    /// Simulation and optimality oracles; nonzero exit on failure
    Verify,
    /// Outcome when both parties run troll farms
    Twosided,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Strategy => Command::Strategy,
            Cmd::Shares => Command::Shares,
            Cmd::Sweep => Command::Sweep,
            Cmd::Regimes => Command::Regimes,
            Cmd::Polarize => Command::Polarize,
            Cmd::Distort => Command::Distort,
            Cmd::Verify => Command::Verify,
            Cmd::Twosided => Command::Twosided,
        }
    }
}

/// Troll-farm equilibrium experiments.
#[derive(Debug, Parser)]
#[command(name = "trollfarm-eq", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. --set signal.mu=2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (defaults to output.dir from the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("TROLLFARM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("TROLLFARM_THREADS={raw} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot build worker pool")
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match cli::run(args.command.into(), &args.config, &args.set, args.out.as_deref()) {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("{}", file.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed; see {}", outcome.out_dir.join("summary.json").display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
