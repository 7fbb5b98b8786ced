//! Front end for the `floquet` binary: reads a flat config, runs one command
//! on a worker pool of the requested size and writes CSV/JSON artifacts
//! plus `manifest.json` into the output directory.
//!
//! Exit codes: 0 on success, 2 for configuration or output-directory
//! problems, 3 for numerical failures (including a failed `validate`).
//! Failures also produce `error.json` when the output directory is usable.

pub mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use floquet_core::{FloquetError, ModelParams};
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "floquet", version, about = "Floquet spectra, wave packets and invariants of the driven SSH chain")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Command to run, overriding the config's `command` key.
    #[arg(long)]
    pub command: Option<Command>,
    /// Print every accepted config key with its default and exit.
    #[arg(long)]
    pub print_defaults: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Output(String),
    Numeric {
        error: FloquetError,
        params: Option<ModelParams>,
        context: String,
    },
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numeric { .. } | CliError::Validation(_) => 3,
        }
    }

    pub fn to_json(&self, command: Option<Command>) -> Value {
        let command = command.map(|c| c.name());
        match self {
            CliError::Config(m) => json!({
                "status": "error", "exit_code": 2, "kind": "config", "code": "config",
                "module": "cli", "message": m, "command": command,
            }),
            CliError::Output(m) => json!({
                "status": "error", "exit_code": 2, "kind": "output", "code": "output",
                "module": "cli", "message": m, "command": command,
            }),
            CliError::Numeric { error, params, context } => json!({
                "status": "error", "exit_code": 3, "kind": "numeric", "code": error.code(),
                "module": error.module(), "message": error.to_string(), "context": context,
                "command": command, "parameters": params,
            }),
            CliError::Validation(m) => json!({
                "status": "error", "exit_code": 3, "kind": "validation", "code": "validation-failed",
                "module": "cli", "message": m, "command": command,
            }),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::Numeric { error, context, .. } => write!(f, "{context}: {error}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

/// Attach the failing parameter set to a library error.
pub(crate) fn numeric(params: &ModelParams, context: impl Into<String>) -> impl FnOnce(FloquetError) -> CliError {
    let params = *params;
    let context = context.into();
    move |error| CliError::Numeric {
        error,
        params: Some(params),
        context,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    pub amp: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
}

/// What a command produced, for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<FileEntry>,
    /// Extended-space truncations actually used, keyed by a short label.
    pub truncations: Vec<(String, usize)>,
}

fn tolerances() -> Value {
    use floquet_core::{extended, model, perturbation, topology, wavepacket};
    json!({
        "degeneracy_tol": model::DEGENERACY_TOL,
        "edge_weight_limit": extended::EDGE_WEIGHT_LIMIT,
        "tie_tolerance": extended::TIE_TOLERANCE,
        "max_truncation": extended::MAX_TRUNCATION,
        "resonance_tol": perturbation::RESONANCE_TOL,
        "gap_tol": topology::GAP_TOL,
        "struct_tol": topology::STRUCT_TOL,
        "winding_tol": topology::WINDING_TOL,
        "min_overlap": topology::MIN_OVERLAP,
        "boundary_limit": wavepacket::BOUNDARY_LIMIT,
        "width_rule": wavepacket::WIDTH_RULE,
    })
}

pub fn manifest(cfg: &RunConfig, workers: usize, outcome: &Outcome) -> Value {
    let config: serde_json::Map<String, Value> = cfg
        .to_pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let truncations: serde_json::Map<String, Value> =
        outcome.truncations.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "tool": "floquet",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": config,
        "config_text": cfg.to_text(),
        "numerics": {
            "integrator": "magnus4",
            "truncation": cfg.numerics.truncation,
            "truncation_used": truncations,
            "steps_per_period": cfg.numerics.steps_per_period,
            "kgrid_size": cfg.numerics.kgrid_size,
            "drift_tol": cfg.numerics.drift_tol,
            "closure_threshold": cfg.numerics.closure_threshold,
            "tolerances": tolerances(),
        },
        "workers": workers,
        "files": outcome.files,
    })
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Run a parsed configuration inside a pool of `workers` threads.
pub fn execute(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Outcome, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(cfg, out))?;
    write_json(&out.join("manifest.json"), &manifest(cfg, workers, &outcome))?;
    Ok(outcome)
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    config::parse(&text, cli.command).map_err(CliError::Config)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    if cli.print_defaults {
        print!("{}", config::defaults_text());
        return 0;
    }
    let workers = match cli.workers {
        Some(0) => {
            return report(&CliError::Config("--workers must be at least 1".into()), cli, None);
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => return report(&e, cli, cli.command),
    };
    match execute(&cfg, &cli.out, workers) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", cli.out.join(&f.path).display());
            }
            println!("{}", cli.out.join("manifest.json").display());
            0
        }
        Err(e) => report(&e, cli, Some(cfg.command)),
    }
}

fn report(err: &CliError, cli: &Cli, command: Option<Command>) -> i32 {
    let body = err.to_json(command);
    eprintln!("{}", serde_json::to_string(&body).unwrap_or_default());
    // error.json is best effort; an unusable directory is already the error
    if fs::create_dir_all(&cli.out).is_ok() {
        let _ = write_json(&cli.out.join("error.json"), &body);
    }
    err.exit_code()
}
