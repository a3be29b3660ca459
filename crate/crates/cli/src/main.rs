use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pbam_cli::{run_to_dir, Command, ConfigError, RunError, ScenarioConfig};

/// Verification flows for quasi-unitary groups and asymptotic morphisms.
///
/// Exit status: 0 when every configured check passes, 1 when a check fails,
/// 2 when the config is unreadable or invalid.
#[derive(Debug, Parser)]
#[command(name = "pbam", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and CSV sweeps.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every grid horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Worker threads for the parallel sweeps.
    #[arg(long)]
    jobs: Option<usize>,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(h) = cli.horizon {
        cfg.grid.horizon = h;
        cfg.grid.s_horizon = cfg.grid.s_horizon.map(|_| h);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("pbam: cannot start {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let result = load(&cli).map_err(RunError::from).and_then(|cfg| run_to_dir(cli.command, &cfg, &cli.out));
    match result {
        Ok(outcome) => {
            let status = if outcome.passed { "passed" } else { "FAILED" };
            println!("{} {status}: {}", cli.command.name(), cli.out.join(format!("{}.json", cli.command.name())).display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("pbam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
