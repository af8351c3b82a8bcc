//! Deterministic artifact emission.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::write_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Write a CSV table with '#' metadata lines; bytes are identical for
/// identical inputs.
pub fn emit_named_columns(
    path: &Path,
    metadata: &[(&str, String)],
    columns: &[(&str, &[f64])],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, metadata, columns)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Pretty-printed JSON document with a trailing newline.
pub fn emit_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut buf =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    buf.push(b'\n');
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}
