//! `plp`: batch driver for the anisotropic Littlewood-Paley toolkit.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use plp_core::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PsiFloor(_)
            | Error::DegenerateOrbit { .. }
            | Error::ZeroQuasinorm(_)
            | Error::ProvenanceMismatch(_)
            | Error::Mass(_) => EXIT_TOLERANCE,
            _ => EXIT_VALIDATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::validation(e.0)
    }
}

#[derive(Parser, Debug)]
#[command(name = "plp", version, about = "Anisotropic Littlewood-Paley analysis on periodic grids")]
struct Cli {
    /// One of: validate, rho-table, partition, transform, reconstruct, gfunc, maximal, atoms, equivalence, constants.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(commands::COMMANDS))]
    command: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let started = Instant::now();
    let (cfg, _) = config::load(&cli.config)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let hash = config::hash(&cfg);
    let mut out = output::Out::new(&dir)?;
    let ctx = commands::Context::new(cfg, seed);
    let result = ctx.and_then(|ctx| commands::run(&cli.command, &ctx, &mut out));
    let (status, failures) = match &result {
        Ok(checks) if checks.0.is_empty() => ("ok".to_string(), Vec::new()),
        Ok(checks) => ("tolerance".to_string(), checks.0.clone()),
        Err(e) => (format!("error {}", e.code), vec![e.message.clone()]),
    };
    let artifacts: Vec<_> = out
        .artifacts
        .iter()
        .map(|(name, sha)| json!({"name": name, "sha256": sha}))
        .collect();
    let manifest = json!({
        "command": cli.command,
        "config_hash": hash,
        "seed": seed,
        "versions": {"plp-core": plp_core::VERSION, "plp-cli": env!("CARGO_PKG_VERSION")},
        "threads": rayon::current_num_threads(),
        "status": status,
        "failures": failures,
        "artifacts": artifacts,
        "started_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    out.json("manifest.json", &manifest)?;
    if cli.verbose {
        for (name, _) in &out.artifacts {
            eprintln!("wrote {}", out.dir().join(name).display());
        }
    }
    result.map(|c| c.0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("plp: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    match execute(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("plp: tolerance: {f}");
            }
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(e) => {
            eprintln!("plp: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
