//! `ontic-audit`: builds finite ontic models from a JSON config and audits
//! them. Exit status is 0 on pass, 1 on a scientific failure and 2 on usage
//! or I/O errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ontic::par::Execution;

#[derive(Parser)]
#[command(
    name = "ontic-audit",
    version,
    about = "Audit finite ontic models of quantum fragments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config with one section per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Tolerance; overrides `tol` in the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Run every batch on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Born-rule reproduction of a model.
    Validate,
    /// Variational-distance trajectories and the nested-refinement bound.
    Onticity,
    /// Disjoint support assignment from the canonical modification.
    Determinate,
    /// Totally incompatible context set with a finite-precision report.
    #[command(name = "mkc-gen")]
    MkcGen,
    /// Anti-distinguishing measurement certificate and noise study.
    Antidistinguish,
    /// Single-shot discrimination against the (1+TV)/2 optimum.
    Discriminate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Onticity => "onticity",
            Command::Determinate => "determinate",
            Command::MkcGen => "mkc-gen",
            Command::Antidistinguish => "antidistinguish",
            Command::Discriminate => "discriminate",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Science(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Science(_) => 1,
            Failure::Usage(_) | Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Science(m) => write!(f, "audit failed: {m}"),
        }
    }
}

impl From<ontic::Error> for Failure {
    fn from(e: ontic::Error) -> Self {
        use ontic::Error::*;
        match e {
            BudgetExhausted { .. }
            | MeasureFloorNotMet { .. }
            | NotCovered { .. }
            | NonPhysicalPerturbation { .. }
            | InsufficientContexts { .. }
            | EventTooComplex(_)
            | SpaceTooLarge(_)
            | Incompatible { .. }
            | Commuting => Failure::Science(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    tol: Option<f64>,
    execution: &'static str,
    parallel_feature: bool,
    config_path: String,
    config: &'a serde_json::Value,
    outputs: Vec<String>,
    passed: bool,
    summary: &'a str,
    wall_time_seconds: f64,
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let start = Instant::now();
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let (config, echo) = config::load(path)?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let ctx = commands::Run {
        config: &config,
        config_path: path,
        seed: cli.seed,
        tol: cli.tol,
        exec,
    };
    let outcome = match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Onticity => commands::onticity(&ctx),
        Command::Determinate => commands::determinate(&ctx),
        Command::MkcGen => commands::mkc_gen(&ctx),
        Command::Antidistinguish => commands::antidistinguish(&ctx),
        Command::Discriminate => commands::discriminate(&ctx),
    }?;
    outcome.outputs.commit(&cli.out)?;
    let manifest = Manifest {
        tool: "ontic-audit",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed: cli.seed.or(config.seed),
        tol: cli.tol.or(config.tol),
        execution: match exec {
            Execution::Sequential => "sequential",
            Execution::Parallel => "parallel",
        },
        parallel_feature: cfg!(feature = "parallel"),
        config_path: path.display().to_string(),
        config: &echo,
        outputs: outcome.outputs.names(),
        passed: outcome.passed,
        summary: &outcome.summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
    bytes.push(b'\n');
    output::write_atomic(&cli.out, "manifest.json", &bytes)?;
    println!(
        "{}: {}: {}",
        cli.command.name(),
        if outcome.passed { "pass" } else { "FAIL" },
        outcome.summary
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("ontic-audit {}: {f}", cli.command.name());
            ExitCode::from(f.code())
        }
    }
}
