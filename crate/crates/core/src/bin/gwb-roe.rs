use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gwb_roe::config::{ExperimentConfig, ExperimentKind};
use gwb_roe::experiments::{run, Verdict};

#[derive(Parser)]
#[command(name = "gwb-roe", version, about = "Wannier-basis localization and Roe-algebra experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice tail sums against the closed-form bound.
    LemmaSweep(RunArgs),
    /// Norm decay of truncated intertwiners.
    Decay(RunArgs),
    /// Kronig-Penney island, Wannier extraction and Gubanov transport.
    ModelPipeline(RunArgs),
    /// Propagation and local-compactness probes.
    Probes(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; defaults for the subcommand when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> gwb_roe::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    if config.kind != kind {
        return Err(gwb_roe::Error::Config(format!(
            "config describes a {} experiment, not {}",
            config.kind.name(),
            kind.name()
        )));
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn print(verdict: &Verdict) {
    for s in &verdict.stages {
        println!("{:<4} {}", if s.pass { "PASS" } else { "FAIL" }, s.name);
    }
    println!("{}: {}", verdict.experiment, if verdict.pass { "pass" } else { "fail" });
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::LemmaSweep(a) => (ExperimentKind::LemmaSweep, a),
        Command::Decay(a) => (ExperimentKind::Decay, a),
        Command::ModelPipeline(a) => (ExperimentKind::ModelPipeline, a),
        Command::Probes(a) => (ExperimentKind::Probes, a),
    };
    let result = load(kind, args).and_then(|config| {
        if args.print_config {
            print!("{}", config.to_toml()?);
            return Ok(None);
        }
        run(&config, &config.output).map(Some)
    });
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(verdict)) => {
            print(&verdict);
            if verdict.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
