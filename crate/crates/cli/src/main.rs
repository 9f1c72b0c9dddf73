mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use bell_ladder::Error as CoreError;
use config::{Cli, Command, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Infeasible(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateAngle(_) => CliError::Degenerate(e.to_string()),
            CoreError::InfeasiblePhi { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    let out = match cfg.command {
        Command::VerifyStepladder => commands::verify_stepladder(cfg)?,
        Command::PhiWindow => commands::phi_window_cmd(cfg)?,
        Command::Coverage => commands::coverage_cmd(cfg)?,
        Command::OptimizeQubit => commands::optimize_qubit(cfg)?,
        Command::Lhv => commands::lhv(cfg)?,
    };
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &out.body)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("{}", out.summary);
        }
        None => print!("{}", out.body),
    }
    Ok(out.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
