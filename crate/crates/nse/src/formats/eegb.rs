//! EEGB: a one-line JSON header followed by channel-major little-endian f32
//! samples.

use std::path::Path;

use nse_core::signal::{Domain, Recording};
use serde::{Deserialize, Serialize};

use super::{header_line, read_bytes, write_bytes};
use crate::error::{ParseError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegbHeader {
    pub version: u32,
    pub fs_hz: f64,
    pub channels: Vec<String>,
    pub n_samples: usize,
    pub dtype: String,
    pub layout: String,
    /// Optional acquisition domain (`imagined` or `spoken`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

pub fn encode(rec: &Recording, domain: Option<Domain>) -> Vec<u8> {
    let header = EegbHeader {
        version: 1,
        fs_hz: rec.sample_rate_hz(),
        channels: rec.channel_names().to_vec(),
        n_samples: rec.n_samples(),
        dtype: "f32le".into(),
        layout: "channel_major".into(),
        domain: domain.map(|d| d.as_str().to_string()),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(rec.samples().len() * 4);
    for &v in rec.samples() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<(Recording, Option<Domain>), ParseError> {
    let (header, start): (EegbHeader, usize) = header_line(bytes)?;
    if header.version != 1 {
        return Err(ParseError::new(0, format!("unsupported version {}", header.version)));
    }
    if header.dtype != "f32le" || header.layout != "channel_major" {
        return Err(ParseError::new(0, format!("unsupported dtype/layout {}/{}", header.dtype, header.layout)));
    }
    let domain = match header.domain.as_deref() {
        None => None,
        Some(s) => Some(s.parse::<Domain>().map_err(|_| ParseError::new(0, format!("unknown domain {s:?}")))?),
    };
    let expected = header.channels.len() * header.n_samples * 4;
    let data = &bytes[start..];
    if data.len() != expected {
        return Err(ParseError::new(
            start + data.len().min(expected),
            format!("expected {expected} data bytes, found {}", data.len()),
        ));
    }
    let mut samples = Vec::with_capacity(expected / 4);
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(ParseError::new(start + 4 * i, "non-finite sample"));
        }
        samples.push(v as f64);
    }
    let rec = Recording::new(header.fs_hz, header.channels, samples).map_err(|e| ParseError::new(0, e.to_string()))?;
    Ok((rec, domain))
}

pub fn read(path: &Path) -> Result<(Recording, Option<Domain>)> {
    decode(&read_bytes(path)?).map_err(|e| e.at(path))
}

pub fn write(path: &Path, rec: &Recording, domain: Option<Domain>) -> Result<()> {
    write_bytes(path, &encode(rec, domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec() -> Recording {
        Recording::new(500.0, vec!["Fz".into(), "Cz".into()], vec![0.5, -1.25, 3.0, 0.0, 1e-3, 7.0]).unwrap()
    }

    #[test]
    fn round_trip_with_domain() {
        let bytes = encode(&rec(), Some(Domain::Spoken));
        let text = std::str::from_utf8(&bytes[..bytes.iter().position(|&b| b == b'\n').unwrap()]).unwrap();
        assert!(text.contains(r#""dtype":"f32le""#) && text.contains(r#""layout":"channel_major""#));
        let (back, domain) = decode(&bytes).unwrap();
        assert_eq!(domain, Some(Domain::Spoken));
        assert_eq!(back.channel_names(), rec().channel_names());
        for (a, b) in back.samples().iter().zip(rec().samples()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        assert_eq!(encode(&back, domain), bytes);
    }

    #[test]
    fn truncation_and_garbage() {
        let bytes = encode(&rec(), None);
        let err = decode(&bytes[..bytes.len() - 3]).unwrap_err();
        assert_eq!(err.offset as usize, bytes.len() - 3);
        assert!(decode(b"{\"version\":1").is_err());
        let err = decode(b"{\"version\":1,\"fs_hz\":x}\n").unwrap_err();
        assert_eq!(err.offset, 21);
        let mut bad = encode(&rec(), None);
        let n = bad.len();
        bad[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode(&bad).unwrap_err().reason.contains("non-finite"));
    }
}
