use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtransport_cli::{commands, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "qtransport", version, about = "Simulate the quantum transport-equation scheme")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run config (TOML) or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Measurement seed; overrides `measurement.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare, evolve and measure one configuration.
    Simulate,
    /// Error and bound table over n, L or the Walsh budget.
    Sweep,
    /// Gate counts per step and per run.
    Gates,
    /// List the built-in problems.
    Catalog,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    if let Command::Catalog = cli.command {
        print!("{}", commands::catalog_listing()?);
        return Ok(());
    }
    let path = cli.config.ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config.measurement.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output = out;
    }
    let out = config.output.clone();
    let art = match cli.command {
        Command::Simulate => commands::simulate(&config, &out)?,
        Command::Sweep => commands::sweep(&config, &out)?,
        Command::Gates => commands::gates(&config, &out)?,
        Command::Catalog => unreachable!(),
    };
    for f in &art.files {
        println!("{}", art.dir.join(f).display());
    }
    println!("{}", art.dir.join("manifest.toml").display());
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
