//! Output plumbing: atomic file writes and the table envelope shared by
//! every emitted artifact.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const TABLE_SCHEMA: &str = "trajlens.table.v1";
pub const MODEL_FILE_SCHEMA: &str = "trajlens.models.v1";
pub const TRUTH_SCHEMA: &str = "trajlens.truth.v1";
pub const SUMMARY_SCHEMA: &str = "trajlens.summary.v1";
pub const SPLIT_SCHEMA: &str = "trajlens.split.v1";

/// Write-then-rename so a crashed run never leaves a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Canonical JSON rendering: pretty, trailing newline. All payload maps are
/// ordered, so output bytes are deterministic.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

/// Envelope for analysis tables: schema version plus analysis name.
#[derive(Serialize)]
pub struct Table<T: Serialize> {
    pub schema: &'static str,
    pub analysis: &'static str,
    pub body: T,
}

pub fn write_table<T: Serialize>(
    dir: &Path,
    analysis: &'static str,
    body: T,
) -> std::io::Result<()> {
    let table = Table {
        schema: TABLE_SCHEMA,
        analysis,
        body,
    };
    write_atomic(&dir.join(format!("{analysis}.json")), &to_json_bytes(&table))
}
