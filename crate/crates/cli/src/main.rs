use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use swarm_svr_cli::{
    cmd_ingest, cmd_reproduce, cmd_run, configure_threads, ExperimentConfig, ModelKind,
};

/// Swarm-tuned SVR for hourly PM2.5 forecasting.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count missing values, impute, standardize and split one year.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        year: Option<i32>,
    },
    /// Train and evaluate one model for one year.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        optimizer: Option<ModelKind>,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run all models for both years and compare with the published table.
    Reproduce {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    configure_threads()?;
    match Cli::parse().command {
        Command::Ingest { config, year } => {
            let cfg = ExperimentConfig::load(config)?;
            let summary = cmd_ingest(&cfg, year.unwrap_or(cfg.year))?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Run {
            config,
            optimizer,
            year,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let kind = optimizer.unwrap_or(cfg.optimizer);
            let report = cmd_run(&cfg, year.unwrap_or(cfg.year), kind)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Reproduce { config } => {
            let cfg = ExperimentConfig::load(config)?;
            cmd_reproduce(&cfg)?;
        }
    }
    Ok(())
}
