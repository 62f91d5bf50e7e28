//! Events CSV with header `onset_sample,label`.

use std::path::{Path, PathBuf};

use nse_core::signal::{Event, EventList};

use super::{read_bytes, write_bytes};
use crate::error::{ParseError, Result};

pub const HEADER: &str = "onset_sample,label";

pub fn encode(events: &EventList) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for e in events.events() {
        out.push_str(&format!("{},{}\n", e.onset_sample, e.label));
    }
    out
}

pub fn decode(bytes: &[u8], vocabulary: u32) -> std::result::Result<EventList, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::new(e.valid_up_to(), "not UTF-8"))?;
    let mut offset = 0;
    let mut events = Vec::new();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        let row = line.trim_end_matches(['\n', '\r']);
        if i == 0 {
            if row.trim() != HEADER {
                return Err(ParseError::new(start, format!("expected header {HEADER:?}")));
            }
            continue;
        }
        if row.trim().is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (Some(onset), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ParseError::new(start, "expected two fields"));
        };
        let onset_sample = onset.trim().parse().map_err(|_| ParseError::new(start, format!("bad onset {onset:?}")))?;
        let label_at = start + onset.len() + 1;
        let label = label.trim().parse().map_err(|_| ParseError::new(label_at, format!("bad label {label:?}")))?;
        events.push(Event { onset_sample, label });
    }
    if text.is_empty() {
        return Err(ParseError::new(0, "empty events file"));
    }
    EventList::new(events, vocabulary).map_err(|e| ParseError::new(0, e.to_string()))
}

/// `<dir>/<stem>.events.csv` next to an EEGB file.
pub fn default_path(eegb: &Path) -> PathBuf {
    let stem = eegb.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    eegb.with_file_name(format!("{stem}.events.csv"))
}

pub fn read(path: &Path, vocabulary: u32) -> Result<EventList> {
    decode(&read_bytes(path)?, vocabulary).map_err(|e| e.at(path))
}

pub fn write(path: &Path, events: &EventList) -> Result<()> {
    write_bytes(path, encode(events).as_bytes())
}
