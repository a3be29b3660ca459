//! Scenario runner behind the `pbam` binary. Every subcommand reads the same
//! JSON config, runs its section and writes a JSON report (plus CSV sweeps)
//! into the output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use serde_json::{json, Value};

pub use config::{Registry, ScenarioConfig, SCHEMA_VERSION};
pub use output::Artifact;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Output(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    VerifyAlgebra,
    Funcalc,
    Pbam,
    Retract,
    Compose,
    Functoriality,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyAlgebra,
        Command::Funcalc,
        Command::Pbam,
        Command::Retract,
        Command::Compose,
        Command::Functoriality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::Funcalc => "funcalc",
            Command::Pbam => "pbam",
            Command::Retract => "retract",
            Command::Compose => "compose",
            Command::Functoriality => "functoriality",
        }
    }

    /// Offset separating the random streams of different commands.
    fn stream_base(self) -> u64 {
        1000 * (Command::ALL.iter().position(|c| *c == self).expect("listed") as u64 + 1)
    }
}

/// One configured check: its JSON summary and the files it produced.
#[derive(Debug)]
pub struct CheckOutcome {
    pub summary: Value,
    pub passed: bool,
    pub artifacts: Vec<Artifact>,
}

impl CheckOutcome {
    /// A check whose computation stopped with an error counts as failed.
    pub fn errored(label: &str, error: impl std::fmt::Display) -> Self {
        Self { summary: json!({ "check": label, "passed": false, "error": error.to_string() }), passed: false, artifacts: Vec::new() }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub command: Command,
    pub report: Value,
    pub passed: bool,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Runs one subcommand in memory.
pub fn run(command: Command, cfg: &ScenarioConfig) -> Result<Outcome, ConfigError> {
    let registry = Registry::build(cfg)?;
    let base = command.stream_base();
    let checks = match command {
        Command::VerifyAlgebra => commands::verify_algebra(cfg, &registry, base)?,
        Command::Funcalc => commands::funcalc(cfg, &registry, base)?,
        Command::Pbam => commands::pbam(cfg, &registry, base)?,
        Command::Retract => commands::retract(cfg, &registry, base)?,
        Command::Compose => commands::compose(cfg, &registry, base)?,
        Command::Functoriality => commands::functoriality(cfg, &registry, base)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    for c in checks {
        summaries.push(c.summary);
        artifacts.extend(c.artifacts);
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "scenario": cfg.name,
        "seed": cfg.seed,
        "passed": passed,
        "checks": summaries,
    });
    Ok(Outcome { command, report, passed, artifacts })
}

/// Runs one subcommand and writes `<command>.json` plus its artifacts into `out`.
pub fn run_to_dir(command: Command, cfg: &ScenarioConfig, out: &Path) -> Result<Outcome, RunError> {
    let outcome = run(command, cfg)?;
    output::write_outcome(&outcome, out).map_err(|e| RunError::Output(e.to_string()))?;
    Ok(outcome)
}
