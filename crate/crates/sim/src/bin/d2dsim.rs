use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use d2d_sim::{emit, run_experiment, ExperimentKind, SimConfig};

#[derive(Parser)]
#[command(name = "d2dsim", about = "Monte Carlo experiments for D2D underlay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uplink and downlink SINR with and without open-loop power control.
    SinrDist(RunArgs),
    /// SINR under the cellular, forced-D2D and path-loss mode criteria.
    ModeSelect(RunArgs),
    /// Threshold-based D2D power control: power saving and efficiency.
    ThresholdPc(RunArgs),
    /// Beamforming and D2D power optimisation on the downlink.
    Beamforming(RunArgs),
    /// Reverse iterative auction of D2D pairs to resource units.
    Auction(RunArgs),
    /// Pricing scheduler over transmission slots.
    Scheduling(RunArgs),
    /// Battery lifetime under the priced resource auction.
    Lifetime(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    drops: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    workers: Option<usize>,
}

fn run(kind: ExperimentKind, args: &RunArgs) -> anyhow::Result<()> {
    let cfg = match &args.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    let result = run_experiment(kind, &cfg, args.seed, args.drops, args.workers)
        .with_context(|| format!("running {kind}"))?;
    let written = emit::write_outputs(&result, &args.out)?;
    for (name, n) in &result.counters {
        eprintln!("{name}: {n}");
    }
    eprintln!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::SinrDist(a) => (ExperimentKind::SinrDist, a),
        Command::ModeSelect(a) => (ExperimentKind::ModeSelect, a),
        Command::ThresholdPc(a) => (ExperimentKind::ThresholdPc, a),
        Command::Beamforming(a) => (ExperimentKind::Beamforming, a),
        Command::Auction(a) => (ExperimentKind::Auction, a),
        Command::Scheduling(a) => (ExperimentKind::Scheduling, a),
        Command::Lifetime(a) => (ExperimentKind::Lifetime, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
