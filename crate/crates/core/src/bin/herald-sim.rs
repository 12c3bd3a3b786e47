use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use herald_sim::config::{load_config, RunConfig};
use herald_sim::error::Result;
use herald_sim::runner::{run, run_sweep, with_thread_cap};

#[derive(Parser)]
#[command(name = "herald-sim", version, about = "Heralded spin-measurement cooling and squeezing of a mechanical mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config.
    Run {
        #[command(flatten)]
        common: Common,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every point of the config's sweep, each into `<out>/point_NNN`.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = load_config(&common.config)?;
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, seed } => {
            let mut config = load(&common)?;
            if seed.is_some() {
                config.seed = seed;
            }
            config.validate()?;
            let report = with_thread_cap(|| run(&config))??;
            let f = &report.summary.final_observables;
            info!(
                "{} rounds -> occupancy {:.4}, var_x {:.4}, event rate {:.4}; wrote {}",
                report.summary.rounds.len(),
                f.occupancy,
                f.var_x,
                report.summary.event_rate,
                report.output_dir.display()
            );
        }
        Command::Sweep { common } => {
            let config = load(&common)?;
            let reports = with_thread_cap(|| run_sweep(&config))??;
            info!("{} sweep points written under {}", reports.len(), config.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Run { common, .. } | Command::Sweep { common } => common.quiet,
    };
    let level = if quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("herald-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
