use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surfacelink_cli::config::RunConfig;
use surfacelink_cli::{commands, CliError};

/// Received-power simulator for RIS and metal-plate assisted links.
#[derive(Debug, Parser)]
#[command(name = "surfacelink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized helpers; physics is deterministic regardless.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Element cross sections for the angles in `[rcs]`.
    Rcs,
    /// Distance or zenith sweep described by `[sweep]`.
    Sweep,
    /// Discrete and continuous phase optimization for `[scene]`.
    Optimize,
    /// Quadrature check of the closed-form cell cross section.
    OracleCheck,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config: required".into()))?;
    let cfg = RunConfig::load(path)?;
    let config_dir = path.parent().map(PathBuf::from).unwrap_or_default();
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Rcs => commands::rcs(&cfg, &cli.out, cli.seed, &mut stdout),
        Command::Sweep => commands::sweep(&cfg, &cli.out, cli.seed, &mut stdout),
        Command::Optimize => commands::optimize(&cfg, &config_dir, &cli.out, cli.seed, &mut stdout),
        Command::OracleCheck => commands::oracle_check(&cfg, &cli.out, cli.seed, &mut stdout),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
