use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsmec_harness::commands;
use irsmec_harness::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "irsmec", version, about = "IRS-assisted offloading experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write one channel file per surface size and trial.
    GenChannels,
    /// Feasibility-check traces over the floor sweep on one realization.
    FeasTrace,
    /// Feasibility probability per surface size, floor and mode.
    FeasProb,
    /// Earning optimization from a feasible start on every realization.
    Optimize,
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; trial t uses channel seed SEED + t.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Channel realizations per surface size.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Surface sizes, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n_elements: Option<Vec<usize>>,
    /// Lowest common rate floor of the sweep, nats.
    #[arg(long, global = true)]
    rate_min: Option<f64>,
    /// Highest common rate floor of the sweep, nats.
    #[arg(long, global = true)]
    rate_max: Option<f64>,
    /// Spacing of the floor sweep, nats.
    #[arg(long, global = true)]
    rate_step: Option<f64>,
}

fn configure(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.trials {
        cfg.trials = v;
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &o.n_elements {
        cfg.n_elements = v.clone();
    }
    if let Some(v) = o.rate_min {
        cfg.sweep.min = v;
    }
    if let Some(v) = o.rate_max {
        cfg.sweep.max = v;
    }
    if let Some(v) = o.rate_step {
        cfg.sweep.step = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = configure(&cli.overrides)?;
    match cli.command {
        Command::GenChannels => commands::gen_channels(&cfg),
        Command::FeasTrace => commands::feas_trace(&cfg),
        Command::FeasProb => commands::feas_prob(&cfg),
        Command::Optimize => commands::optimize_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
