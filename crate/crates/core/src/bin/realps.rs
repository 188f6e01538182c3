use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use realps::runner::{cmd_compare, cmd_diagnose, cmd_sample, cmd_train, RunConfig};

#[derive(Parser)]
#[command(
    name = "realps",
    version,
    about = "Tilted simulated tempering with learned weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn component and level weights.
    Train(Common),
    /// Draw target-level samples.
    Sample(Common),
    /// Run several schemes on the same budget.
    Compare(Common),
    /// Balance, divergence, spectral-gap and occupancy reports.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> realps::Result<()> {
    let (name, common) = match &cli.command {
        Command::Train(c) => ("train", c),
        Command::Sample(c) => ("sample", c),
        Command::Compare(c) => ("compare", c),
        Command::Diagnose(c) => ("diagnose", c),
    };
    let config = RunConfig::load(&common.config)?.with_overrides(
        common.seed,
        common.replicas,
        common.out.clone(),
    );
    log::info!("{name}: writing to {}", config.out.display());
    match cli.command {
        Command::Train(_) => {
            let out = cmd_train(&config)?;
            println!("trained {} levels", out.scheme.levels());
        }
        Command::Sample(_) => {
            let out = cmd_sample(&config)?;
            println!(
                "{} samples, occupancy error {}",
                out.summary.samples, out.summary.occupancy_error
            );
        }
        Command::Compare(_) => {
            for row in cmd_compare(&config)?.rows {
                match row.occupancy_error {
                    Some(e) => println!("{}: occupancy error {e}", row.scheme.as_str()),
                    None => println!("{}: {}", row.scheme.as_str(), row.error.unwrap_or_default()),
                }
            }
        }
        Command::Diagnose(_) => {
            let out = cmd_diagnose(&config)?;
            if let Some(b) = out.balance {
                println!("h1 {} h2 {}", b.trained.h1_max, b.trained.h2_ratio);
            }
            if let Some(o) = out.occupancy {
                println!("occupancy error {}", o.occupancy_error);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("REALPS_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
