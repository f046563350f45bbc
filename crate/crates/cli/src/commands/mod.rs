//! Subcommand implementations. Each command returns the number of per-item
//! failures (0 on full success); hard errors abort with `CliError`.

pub mod analyze;
pub mod calibrate;
pub mod evaluate;
pub mod ingest;
pub mod synth;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;
use trajlens_core::calibration::{CalibrationMethod, CalibrationModel};
use trajlens_core::detectors::DefectClass;
use trajlens_core::evaluation::AnnotationRecord;
use trajlens_core::trajectory::{canonical_parse, Trajectory};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    BadInput { path: PathBuf, reason: String },
    #[error("split leakage: {0}")]
    SplitLeakage(String),
    #[error("analysis {analysis} requires {missing}")]
    MissingInput {
        analysis: String,
        missing: String,
    },
    #[error("{0}")]
    Failed(String),
    #[error("aborting after first error (strict mode): {0}")]
    Strict(String),
}

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn bad_input(path: &Path, reason: impl ToString) -> CliError {
    CliError::BadInput {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    canonical_parse(&bytes).map_err(|e| bad_input(path, e))
}

/// JSONL annotation loader; every record is validated on read.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord = serde_json::from_str(line)
            .map_err(|e| bad_input(path, format!("line {}: {e}", lineno + 1)))?;
        record
            .validate()
            .map_err(|e| bad_input(path, format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

/// Serialized calibrator bundle: one model per defect class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub method: CalibrationMethod,
    pub models: BTreeMap<DefectClass, CalibrationModel>,
}

pub fn load_models(path: &Path) -> Result<ModelFile, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let file: ModelFile = serde_json::from_slice(&bytes).map_err(|e| bad_input(path, e))?;
    if file.schema != crate::output::MODEL_FILE_SCHEMA {
        return Err(bad_input(
            path,
            format!("unsupported model schema {}", file.schema),
        ));
    }
    Ok(file)
}

/// Report a per-item failure: strict mode turns it into a hard error.
pub fn report_item(
    strict: bool,
    failures: &mut usize,
    context: &Path,
    err: impl std::fmt::Display,
) -> Result<(), CliError> {
    let line = format!("{}: {err}", context.display());
    if strict {
        return Err(CliError::Strict(line));
    }
    eprintln!("error: {line}");
    *failures += 1;
    Ok(())
}
