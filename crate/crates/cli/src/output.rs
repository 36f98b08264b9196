//! CSV and text writers. Every CSV starts with the `#`-prefixed config echo,
//! followed by a header row with a fixed column order.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn csv_bytes<T: Serialize>(echo: &str, rows: &[T]) -> Result<Vec<u8>, String> {
    let mut w = csv::Writer::from_writer(echo.as_bytes().to_vec());
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

pub fn write_csv<T: Serialize>(path: &Path, echo: &str, rows: &[T]) -> CliResult<()> {
    let bytes = csv_bytes(echo, rows).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads a CSV written by [`write_csv`], skipping the comment lines.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::io(path, e))
}
