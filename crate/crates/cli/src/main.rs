//! `symplab`: run the experiments and write one CSV table plus a JSON
//! verdict per run.
//!
//! Exit codes: 0 all asserted tolerances pass, 1 a tolerance failed,
//! 2 bad configuration, 3 numerical failure, 4 golden disagreement or
//! output error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentArgs, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] symplab::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use symplab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                E::UnknownChart(_)
                | E::UnknownAlgebra(_)
                | E::UnknownEntry(_)
                | E::InvalidArgument(_)
                | E::InvalidDimension(_)
                | E::InvalidGrid(_)
                | E::UnknownIndex(_)
                | E::Parse(_),
            ) => 2,
            CliError::Core(E::GoldenMismatch { .. } | E::Io(_) | E::Csv(_) | E::Json(_)) => 4,
            CliError::Core(_) => 3,
            CliError::Io(_) | CliError::Json(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "symplab", version, about = "Poisson brackets, Hamiltonian flows and pseudo-representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bracket of an entry's canonical pair on its grid.
    Bracket(ExperimentArgs),
    /// Trajectory of a Hamiltonian flow.
    Flow(ExperimentArgs),
    /// Defect norms over the index set.
    Defect(ExperimentArgs),
    /// Truncated ad-series residuals against their bound.
    Lemma3(ExperimentArgs),
    /// Convergence table and limit verdict of a gallery entry.
    Gallery(ExperimentArgs),
    /// Distributional pairing along a pair family.
    Prop6(ExperimentArgs),
    /// Doubly indexed pairing against a candidate bracket.
    Prop7(ExperimentArgs),
    /// Symplecticity of a coordinate map.
    Sympcheck(ExperimentArgs),
    /// Commutator flow of affine-at-infinity Hamiltonians.
    Commutator(ExperimentArgs),
    /// Recompute the golden constants and compare with the stored table.
    Golden(ExperimentArgs),
    /// Run an experiment by name.
    Run {
        experiment: String,
        #[command(flatten)]
        args: ExperimentArgs,
    },
}

impl Command {
    fn resolve(self) -> (String, ExperimentArgs) {
        match self {
            Command::Bracket(a) => ("bracket".into(), a),
            Command::Flow(a) => ("flow".into(), a),
            Command::Defect(a) => ("defect".into(), a),
            Command::Lemma3(a) => ("lemma3".into(), a),
            Command::Gallery(a) => ("gallery".into(), a),
            Command::Prop6(a) => ("prop6".into(), a),
            Command::Prop7(a) => ("prop7".into(), a),
            Command::Sympcheck(a) => ("sympcheck".into(), a),
            Command::Commutator(a) => ("commutator".into(), a),
            Command::Golden(a) => ("golden".into(), a),
            Command::Run { experiment, args } => (experiment, args),
        }
    }
}

fn execute(experiment: &str, args: &ExperimentArgs) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::from_args(experiment, args);
    if let Some(path) = &args.config {
        cfg = cfg.overridden_by(ExperimentConfig::read(path)?);
    }
    cfg.validate()?;
    let name = cfg.experiment.clone().unwrap_or_default();
    let outcome = commands::run(&cfg)?;
    let dir: PathBuf = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(format!("{name}.csv")), &outcome.csv)?;
    let mut verdict = outcome.verdict;
    verdict["config"] = serde_json::to_value(&cfg)?;
    std::fs::write(dir.join(format!("{name}_verdict.json")), serde_json::to_string_pretty(&verdict)? + "\n")?;
    println!("{}", outcome.summary);
    println!("{}: {}", name, if outcome.pass { "PASS" } else { "FAIL" });
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = cli.command.resolve();
    match execute(&experiment, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
