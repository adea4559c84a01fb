//! `mfgclaw <command> --config <path> [--out DIR] [--seed N] [--strict]`
//!
//! Exit codes: 0 success, 2 config error, 3 solver error, 4 ambiguous classification under `--strict`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_AMBIGUOUS: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "ConfigError".into(), message: message.into() }
    }

    pub fn config_from(e: mfgclaw::Error) -> Self {
        Self { code: EXIT_CONFIG, kind: e.kind().into(), message: e.to_string() }
    }

    pub fn solver_from(e: impl Into<mfgclaw::Error>) -> Self {
        let e = e.into();
        Self { code: EXIT_SOLVER, kind: e.kind().into(), message: e.to_string() }
    }

    fn io(what: &str, path: &Path, e: std::io::Error) -> Self {
        Self { code: EXIT_SOLVER, kind: "Io".into(), message: format!("{what} {}: {e}", path.display()) }
    }

    fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind, "message": self.message, "exit_code": self.code } })
    }
}

#[derive(Parser, Debug)]
#[command(name = "mfgclaw", version, about = "Mean field game solvers and scalar conservation law tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for sampled measures; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with code 4 when a classification is ambiguous.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact Riemann fan and a Godunov comparison.
    Riemann(Common),
    /// Characteristic diagram, tracked shocks and fans.
    Characteristics(Common),
    /// Fixed points of the equilibrium map on given or sampled measures.
    Equilibrium(Common),
    /// Monotonicity verdict for the equilibrium map.
    Monotonicity(Common),
    /// Selection classification of equilibria along a line of means.
    Select(Common),
    /// Vanishing viscosity study.
    Viscosity(Common),
    /// N-player projection and master-equation residuals.
    Nproj(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Riemann(c) => ("riemann", c),
            Command::Characteristics(c) => ("characteristics", c),
            Command::Equilibrium(c) => ("equilibrium", c),
            Command::Monotonicity(c) => ("monotonicity", c),
            Command::Select(c) => ("select", c),
            Command::Viscosity(c) => ("viscosity", c),
            Command::Nproj(c) => ("nproj", c),
        }
    }
}

fn run(cmd: &Command) -> Result<u8, CliError> {
    let (name, common) = cmd.parts();
    let loaded = config::load(&common.config)?;
    let seed = common.seed.or(loaded.config.seed).unwrap_or(0);
    let (cfg, model) = (&loaded.config, &loaded.model);
    let output = match cmd {
        Command::Riemann(_) => commands::riemann(cfg, model),
        Command::Characteristics(_) => commands::characteristics(cfg, model),
        Command::Equilibrium(_) => commands::equilibrium(cfg, model, seed),
        Command::Monotonicity(_) => commands::monotonicity(cfg, model, seed),
        Command::Select(_) => commands::select(cfg, model),
        Command::Viscosity(_) => commands::viscosity(cfg, model),
        Command::Nproj(_) => commands::nproj(cfg, model, seed),
    }?;

    std::fs::create_dir_all(&common.out).map_err(|e| CliError::io("cannot create", &common.out, e))?;
    for (file, bytes) in &output.files {
        let path = common.out.join(file);
        std::fs::write(&path, bytes).map_err(|e| CliError::io("cannot write", &path, e))?;
    }
    let manifest = json!({
        "schema_version": config::RUN_SCHEMA_VERSION,
        "command": name,
        "config_sha256": hex::encode(Sha256::digest(&loaded.bytes)),
        "model": model.name,
        "seed": seed,
        "strict": common.strict,
        "versions": {
            "mfgclaw": mfgclaw::VERSION,
            "mfgclaw-cli": env!("CARGO_PKG_VERSION"),
            "model_schema": mfgclaw::model::MODEL_SCHEMA_VERSION,
        },
        "tolerances": output.tolerances,
        "ambiguous": output.ambiguous,
        "outputs": output.files.iter().map(|(f, _)| f.as_str()).collect::<Vec<_>>(),
    });
    let path = common.out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io("cannot write", &path, e))?;

    if common.strict && output.ambiguous {
        eprintln!("{}", json!({ "warning": "ambiguous classification", "exit_code": EXIT_AMBIGUOUS }));
        return Ok(EXIT_AMBIGUOUS);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let body = e.to_json();
            eprintln!("{body}");
            let out = &cli.command.parts().1.out;
            if out.is_dir() {
                let _ = std::fs::write(out.join("error.json"), format!("{body:#}\n"));
            }
            ExitCode::from(e.code)
        }
    }
}
