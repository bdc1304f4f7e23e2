//! Experiment runner for the `pairlind` solvers.
//!
//! A run reads one TOML config, validates it completely, dispatches to the
//! solver and writes a table (CSV or JSON) plus a `.meta.json` sidecar with
//! the config hash, solver tolerances and crate versions.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use std::path::{Path, PathBuf};

use serde_json::json;

use config::{Experiment, ExperimentConfig, ExperimentKind, Format, ValidationError};
use output::{Metadata, Table};

/// Environment variable that redirects every output file into a directory.
pub const OUT_DIR_ENV: &str = "PAIRLIND_OUT_DIR";

/// Command-line settings layered over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    /// Value of [`OUT_DIR_ENV`], if set.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Validation(ValidationError),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    /// One-line JSON report for stderr.
    pub fn to_json(&self) -> String {
        match self {
            Failure::Validation(v) => v.to_json(),
            Failure::Runtime(msg) => json!({ "error": "runtime", "message": msg }).to_string(),
        }
    }
}

impl From<ValidationError> for Failure {
    fn from(v: ValidationError) -> Self {
        Failure::Validation(v)
    }
}

#[derive(Debug)]
pub struct Completed {
    pub table: Table,
    /// Files written, main output first; empty when printing to stdout.
    pub written: Vec<PathBuf>,
    pub passed: bool,
}

fn resolve_output(cfg: &ExperimentConfig, ov: &Overrides) -> Option<PathBuf> {
    let path = ov.out.clone().or_else(|| cfg.output_path.clone())?;
    Some(match (&ov.out_dir, path.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => path,
    })
}

/// Validates `config_text` for the experiment `kind` and applies overrides.
/// `verify` may run without a config.
pub fn prepare(
    kind: ExperimentKind,
    config_text: Option<&[u8]>,
    ov: &Overrides,
) -> Result<ExperimentConfig, ValidationError> {
    let mut cfg = match config_text {
        Some(bytes) => config::validate_bytes(bytes)?,
        None if kind == ExperimentKind::VerifySuite => ExperimentConfig {
            experiment: Experiment::VerifySuite,
            output_path: None,
            format: Format::Csv,
        },
        None => {
            return Err(ValidationError::single(
                "--config",
                "a config file is required",
            ))
        }
    };
    if cfg.experiment.kind() != kind {
        return Err(ValidationError::single(
            "experiment",
            format!(
                "config is for {} but the command is {kind}",
                cfg.experiment.kind()
            ),
        ));
    }
    if let Some(f) = ov.format {
        cfg.format = f;
    }
    if let Some(seed) = ov.seed {
        match &mut cfg.experiment {
            Experiment::GillespieCurve(c) => c.seed = seed,
            _ => {
                return Err(ValidationError::single(
                    "--seed",
                    "only Monte Carlo experiments take a seed",
                ))
            }
        }
    }
    Ok(cfg)
}

/// Validates, runs and writes one experiment.
pub fn run_experiment(
    kind: ExperimentKind,
    config_text: Option<&[u8]>,
    ov: &Overrides,
) -> Result<Completed, Failure> {
    let cfg = prepare(kind, config_text, ov)?;
    let out_path = resolve_output(&cfg, ov);
    if out_path.is_none() && kind != ExperimentKind::VerifySuite {
        return Err(ValidationError::single(
            "output_path",
            "no output path; set output_path in the config or pass --out",
        )
        .into());
    }

    let result = run::execute(&cfg.experiment).map_err(|e| Failure::Runtime(e.to_string()))?;

    let mut written = Vec::new();
    if let Some(out) = &out_path {
        let mut notes = result.notes.clone();
        if let Some(seed) = ov.seed {
            notes.insert("seed_override".into(), json!(seed));
        }
        notes.insert("passed".into(), json!(result.passed));
        let meta = Metadata {
            experiment: kind.name().to_string(),
            format: cfg.format,
            config_sha256: output::sha256_hex(config_text.unwrap_or_default()),
            rows: result.table.len(),
            tolerances: result.tolerances.clone(),
            notes,
            versions: output::versions(),
        };
        written = output::write_outputs(out, cfg.format, &result.table, &result.attachments, &meta)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", display(out))))?;
    }
    Ok(Completed {
        table: result.table,
        written,
        passed: result.passed,
    })
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
