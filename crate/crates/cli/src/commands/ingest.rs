//! `ingest`: map raw logs onto the canonical trajectory format.

use super::{io_err, report_item, CliError};
use crate::output::write_atomic;
use std::path::{Path, PathBuf};
use trajlens_core::trajectory::{canonical_serialize, AdapterRegistry};

pub fn run(
    inputs: &[PathBuf],
    adapter: &str,
    out_dir: &Path,
    strict: bool,
) -> Result<usize, CliError> {
    let registry = AdapterRegistry::default();
    if !registry.names().contains(&adapter) {
        return Err(CliError::Failed(format!(
            "unknown adapter {adapter}; available: {}",
            registry.names().join(", ")
        )));
    }
    let mut failures = 0usize;
    for input in inputs {
        let raw = match std::fs::read(input) {
            Ok(raw) => raw,
            Err(e) => {
                report_item(strict, &mut failures, input, e)?;
                continue;
            }
        };
        let trajectory = match registry.ingest(&raw, adapter) {
            Ok(t) => t,
            Err(e) => {
                report_item(strict, &mut failures, input, e)?;
                continue;
            }
        };
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("trajectory");
        let out = out_dir.join(format!("{stem}.traj"));
        write_atomic(&out, &canonical_serialize(&trajectory)).map_err(io_err(&out))?;
    }
    Ok(failures)
}
