//! Embedding records: a JSON header line, then per record a 16-byte header
//! (`epoch_id` u32, `label` u32, `domain` u8, 7 zero bytes) followed by the
//! window-major matrix as little-endian f32.
//!
//! Values are stored in single precision: loading returns each value rounded
//! to the nearest f32, and re-saving a loaded file reproduces it byte for byte.

use std::path::Path;

use nse_core::embedding::EmbeddingMatrix;
use nse_core::signal::Domain;
use serde::{Deserialize, Serialize};

use super::{header_line, read_bytes, write_bytes};
use crate::error::{Error, ParseError, Result};

const RECORD_HEADER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub version: u32,
    pub n_windows: usize,
    pub n_filters: usize,
    pub count: usize,
}

pub fn encode(ms: &[EmbeddingMatrix]) -> Result<Vec<u8>> {
    let (n_windows, n_filters) = ms.first().map_or((0, 0), |m| (m.n_windows, m.n_filters));
    if let Some(m) = ms.iter().find(|m| m.n_windows != n_windows || m.n_filters != n_filters || m.values.len() != n_windows * n_filters) {
        return Err(nse_core::Error::Shape(format!(
            "epoch {} is {}x{} among {n_windows}x{n_filters} matrices",
            m.epoch_id, m.n_windows, m.n_filters
        ))
        .into());
    }
    let header = EmbeddingHeader { version: 1, n_windows, n_filters, count: ms.len() };
    let mut out = serde_json::to_vec(&header).map_err(|e| Error::Config(e.to_string()))?;
    out.push(b'\n');
    for m in ms {
        out.extend_from_slice(&m.epoch_id.to_le_bytes());
        out.extend_from_slice(&m.label.to_le_bytes());
        out.push(m.domain.code());
        out.extend_from_slice(&[0; 7]);
        for &v in &m.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_header(bytes: &[u8]) -> std::result::Result<(EmbeddingHeader, usize), ParseError> {
    let (header, start): (EmbeddingHeader, usize) = header_line(bytes)?;
    if header.version != 1 {
        return Err(ParseError::new(0, format!("unsupported version {}", header.version)));
    }
    Ok((header, start))
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Vec<EmbeddingMatrix>, ParseError> {
    let (header, start) = decode_header(bytes)?;
    let per_matrix = header.n_windows * header.n_filters;
    let record = RECORD_HEADER + 4 * per_matrix;
    let expected = start + header.count * record;
    if bytes.len() != expected {
        return Err(ParseError::new(
            bytes.len().min(expected),
            format!("{} records need {expected} bytes, file has {}", header.count, bytes.len()),
        ));
    }
    let mut out = Vec::with_capacity(header.count);
    for r in 0..header.count {
        let at = start + r * record;
        let rec = &bytes[at..at + record];
        let epoch_id = u32::from_le_bytes(rec[0..4].try_into().unwrap());
        let label = u32::from_le_bytes(rec[4..8].try_into().unwrap());
        let domain = Domain::from_code(rec[8]).ok_or_else(|| ParseError::new(at + 8, format!("unknown domain code {}", rec[8])))?;
        let values = rec[RECORD_HEADER..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        out.push(EmbeddingMatrix { n_windows: header.n_windows, n_filters: header.n_filters, values, epoch_id, label, domain });
    }
    Ok(out)
}

/// One row per (epoch, window): `epoch_id,label,domain,window,f0,…`.
pub fn to_csv(ms: &[EmbeddingMatrix]) -> String {
    let n_filters = ms.first().map_or(0, |m| m.n_filters);
    let mut out = String::from("epoch_id,label,domain,window");
    for j in 0..n_filters {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for m in ms {
        for w in 0..m.n_windows {
            out.push_str(&format!("{},{},{},{w}", m.epoch_id, m.label, m.domain.as_str()));
            for j in 0..m.n_filters {
                out.push_str(&format!(",{}", m.get(w, j)));
            }
            out.push('\n');
        }
    }
    out
}

pub fn read(path: &Path) -> Result<Vec<EmbeddingMatrix>> {
    decode(&read_bytes(path)?).map_err(|e| e.at(path))
}

pub fn write(path: &Path, ms: &[EmbeddingMatrix]) -> Result<()> {
    write_bytes(path, &encode(ms)?)
}
