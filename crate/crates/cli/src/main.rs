//! `dgpml run <config>` and `dgpml sweep <config>`.
//!
//! Exit codes: 0 ok, 2 configuration, 3 mesh, 4 instability, 5 I/O. Any
//! nonzero exit leaves a `FAILED` file in the output directory naming the stage.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Plan;
use crate::error::{AtStage, Stage};

#[derive(Debug, Parser)]
#[command(name = "dgpml", version, about = "Nodal DG acoustics with a perfectly matched layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding the config's `output`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Accepted for scripting symmetry; the solver uses no random numbers.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write the energy trace, snapshots and manifest.
    Run { config: PathBuf },
    /// Sweep σ_max over multiples of σ₀ and write the ξ_R table.
    Sweep { config: PathBuf },
}

fn execute(cli: &Cli) -> Result<(), (Option<PathBuf>, error::Failure)> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| error::CliError::Config(format!("--threads: {e}")))
            .at(Stage::Config)
            .map_err(|f| (None, f))?;
    }
    let path = match &cli.command {
        Command::Run { config } | Command::Sweep { config } => config,
    };
    let (config, out_dir) = commands::load(path, cli.output.as_deref())?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fail = |f| (Some(out_dir.clone()), f);
    let plan = Plan::new(config, out_dir.clone(), base).map_err(fail)?;
    match cli.command {
        Command::Run { .. } => commands::run(&plan).map_err(fail),
        Command::Sweep { .. } => {
            let table = commands::sweep(&plan).map_err(fail)?;
            if let Some(best) = table.best() {
                log::info!(
                    "best sigma_max {:.4e} ({} x sigma0), xi_R {:.4e}",
                    best.sigma_max,
                    best.multiplier,
                    best.xi_r.unwrap_or(f64::NAN)
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((dir, failure)) => {
            log::error!("{} stage failed: {}", failure.stage, failure.error);
            if let Some(dir) = dir {
                output::write_failed(&dir, failure.stage, &failure.error);
            }
            ExitCode::from(failure.error.exit_code())
        }
    }
}
