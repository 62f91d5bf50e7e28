//! On-disk formats. Each codec works on in-memory buffers and reports parse
//! failures with a byte offset; the `read_*`/`write_*` wrappers add paths.

pub mod bank;
pub mod eegb;
pub mod embeddings;
pub mod events;
pub mod ica_model;
pub mod tables;
pub mod truth;
pub mod wav;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, ParseError, Result};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes`, creating parent directories as needed.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Splits a buffer into its first-line JSON header and the data offset.
pub(crate) fn header_line<T: DeserializeOwned>(bytes: &[u8]) -> std::result::Result<(T, usize), ParseError> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ParseError::new(bytes.len(), "missing newline after header"))?;
    let header = serde_json::from_slice(&bytes[..end]).map_err(|e| json_error(&bytes[..end], &e, 0))?;
    Ok((header, end + 1))
}

/// Converts a serde_json line/column position into a byte offset.
pub(crate) fn json_error(text: &[u8], err: &serde_json::Error, base: usize) -> ParseError {
    let mut offset = 0;
    if err.line() > 0 {
        let mut line = 1;
        for (i, &b) in text.iter().enumerate() {
            if line == err.line() {
                offset = i + err.column().saturating_sub(1);
                break;
            }
            if b == b'\n' {
                line += 1;
            }
        }
    }
    ParseError::new(base + offset.min(text.len()), err.to_string())
}

/// Parses a whole JSON file, mapping errors to byte offsets.
pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(&bytes, &e, 0).at(path))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push(b'\n');
    write_bytes(path, &text)
}
