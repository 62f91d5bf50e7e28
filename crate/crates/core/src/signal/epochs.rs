use alloc::format;
use alloc::vec::Vec;

use super::{seconds_to_samples, Domain, EpochSet, EventList, Recording};
use crate::error::{Error, Result};

/// Cuts one epoch of `round(epoch_seconds × fs)` samples per event.
pub fn segment(rec: &Recording, events: &EventList, epoch_seconds: f64, domain: Domain) -> Result<EpochSet> {
    if !(epoch_seconds > 0.0) {
        return Err(Error::invalid("epoch_seconds", format!("{epoch_seconds} must be positive")));
    }
    let len = seconds_to_samples(epoch_seconds, rec.sample_rate_hz());
    if len == 0 {
        return Err(Error::invalid("epoch_seconds", "epoch shorter than one sample"));
    }
    let offending: Vec<usize> = events
        .events()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.onset_sample + len > rec.n_samples())
        .map(|(i, _)| i)
        .collect();
    if !offending.is_empty() {
        return Err(Error::OutOfRange {
            detail: format!("epochs of {len} samples exceed recording length {}", rec.n_samples()),
            offending,
        });
    }

    let n_channels = rec.n_channels();
    let mut data = Vec::with_capacity(events.len() * n_channels * len);
    for e in events.events() {
        for c in 0..n_channels {
            data.extend_from_slice(&rec.channel(c)[e.onset_sample..e.onset_sample + len]);
        }
    }
    let labels = events.events().iter().map(|e| e.label).collect();
    EpochSet::new(rec.sample_rate_hz(), n_channels, len, data, labels, alloc::vec![domain; events.len()])
}

/// Subtracts, per event and channel, the mean of the `baseline_seconds`
/// preceding the onset from the trial samples `[onset, onset + epoch)`.
///
/// Means are taken from the input recording, so a trial that overlaps a later
/// event's baseline window does not feed its correction forward. Samples
/// outside every trial keep their values.
pub fn baseline_correct(
    rec: &Recording,
    events: &EventList,
    baseline_seconds: f64,
    epoch_seconds: f64,
) -> Result<Recording> {
    let fs = rec.sample_rate_hz();
    let window = seconds_to_samples(baseline_seconds, fs);
    let len = seconds_to_samples(epoch_seconds, fs);
    if window == 0 {
        return Err(Error::invalid("baseline_seconds", "baseline window shorter than one sample"));
    }
    let early: Vec<usize> = events
        .events()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.onset_sample < window)
        .map(|(i, _)| i)
        .collect();
    if !early.is_empty() {
        return Err(Error::OutOfRange {
            detail: format!("onsets precede the {window}-sample baseline window"),
            offending: early,
        });
    }
    let late: Vec<usize> = events
        .events()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.onset_sample + len > rec.n_samples())
        .map(|(i, _)| i)
        .collect();
    if !late.is_empty() {
        return Err(Error::OutOfRange {
            detail: format!("trials of {len} samples exceed recording length {}", rec.n_samples()),
            offending: late,
        });
    }

    let mut out = rec.clone();
    for c in 0..rec.n_channels() {
        let input = rec.channel(c);
        let output = out.channel_mut(c);
        for e in events.events() {
            let onset = e.onset_sample;
            let mean = input[onset - window..onset].iter().sum::<f64>() / window as f64;
            for (o, &v) in output[onset..onset + len].iter_mut().zip(&input[onset..onset + len]) {
                *o = v - mean;
            }
        }
    }
    Ok(out)
}
