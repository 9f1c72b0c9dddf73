use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    VerifyStepladder,
    PhiWindow,
    Coverage,
    OptimizeQubit,
    Lhv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "bell-ladder",
    version,
    about = "Ladder proofs of nonlocality for two spin-1 particles"
)]
pub struct Cli {
    /// Command to run; may also come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Plain-text `key=value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of ladder blocks (or qubit steps).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Relative angle in degrees.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Comma-separated angles in degrees.
    #[arg(long)]
    pub theta: Option<String>,
    /// `sec3`, `sec4`, or three comma-separated angles.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Scan resolution; with `coverage`, scan for the best pattern.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Direction table (JSON) to verify instead of building one.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

/// Flags merged over the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub k: Option<usize>,
    pub phi: Option<f64>,
    pub theta: Option<Vec<f64>>,
    pub pattern: Option<String>,
    pub grid: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub table: Option<PathBuf>,
}

pub const DEFAULT_TOL: f64 = 1e-10;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(format!("bad value for {key}: {v}")))
}

pub fn parse_angles(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(|s| parse_num::<f64>("angle list", s))
        .collect()
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("line {}: expected key=value", n + 1)))?;
        let key = k.trim().trim_start_matches("--");
        let key = if key == "K" || key == "k" {
            "K".to_string()
        } else {
            key.to_lowercase()
        };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        for key in file.keys() {
            if ![
                "command", "K", "phi", "theta", "pattern", "grid", "tol", "seed", "out", "format",
                "table",
            ]
            .contains(&key.as_str())
            {
                return Err(invalid(format!("unknown config key {key}")));
            }
        }
        let get = |key: &str| file.get(key).map(String::as_str);
        let command = match (cli.command, get("command")) {
            (Some(c), _) => c,
            (None, Some(v)) => {
                Command::from_str(v, true).map_err(|_| invalid(format!("unknown command {v}")))?
            }
            (None, None) => return Err(invalid("no command given")),
        };
        let format = match (cli.format, get("format")) {
            (Some(f), _) => Some(f),
            (None, Some(v)) => Some(
                Format::from_str(v, true).map_err(|_| invalid(format!("unknown format {v}")))?,
            ),
            (None, None) => None,
        };
        let theta = match (cli.theta, get("theta")) {
            (Some(t), _) => Some(parse_angles(&t)?),
            (None, Some(t)) => Some(parse_angles(t)?),
            (None, None) => None,
        };
        let k = cli
            .k
            .map(Ok)
            .or_else(|| get("K").map(|v| parse_num("K", v)))
            .transpose()?;
        let phi = cli
            .phi
            .map(Ok)
            .or_else(|| get("phi").map(|v| parse_num("phi", v)))
            .transpose()?;
        let grid = cli
            .grid
            .map(Ok)
            .or_else(|| get("grid").map(|v| parse_num("grid", v)))
            .transpose()?;
        let tol = cli
            .tol
            .map(Ok)
            .or_else(|| get("tol").map(|v| parse_num("tol", v)))
            .transpose()?
            .unwrap_or(DEFAULT_TOL);
        let seed = cli
            .seed
            .map(Ok)
            .or_else(|| get("seed").map(|v| parse_num("seed", v)))
            .transpose()?
            .unwrap_or(0);
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(invalid(format!("tolerance {tol} outside (0, 1e-4]")));
        }
        Ok(RunConfig {
            command,
            k,
            phi,
            theta,
            pattern: cli.pattern.or_else(|| get("pattern").map(str::to_string)),
            grid,
            tol,
            seed,
            out: cli.out.or_else(|| get("out").map(PathBuf::from)),
            format,
            table: cli.table.or_else(|| get("table").map(PathBuf::from)),
        })
    }
}
