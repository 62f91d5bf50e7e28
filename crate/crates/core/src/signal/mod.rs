//! Continuous recordings, epochs, IIR filtering and trial segmentation.

mod epochs;
mod filter;

pub use epochs::{baseline_correct, segment};
pub use filter::{design_bandpass, design_notch, filtfilt, filtfilt_channel, Biquad, FilterKind, SosFilter};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Multi-channel continuous signal stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    sample_rate_hz: f64,
    channel_names: Vec<String>,
    n_samples: usize,
    samples: Vec<f64>,
}

impl Recording {
    pub fn new(sample_rate_hz: f64, channel_names: Vec<String>, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample_rate_hz", format!("must be positive, got {sample_rate_hz}")));
        }
        if channel_names.is_empty() {
            return Err(Error::invalid("channel_names", "at least one channel required"));
        }
        if samples.is_empty() || !samples.len().is_multiple_of(channel_names.len()) {
            return Err(Error::Shape(format!(
                "{} samples cannot be split evenly over {} channels",
                samples.len(),
                channel_names.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("samples", format!("non-finite value at flat index {i}")));
        }
        let n_samples = samples.len() / channel_names.len();
        Ok(Self { sample_rate_hz, channel_names, n_samples, samples })
    }

    /// Channel names `ch0`, `ch1`, ...
    pub fn with_default_names(sample_rate_hz: f64, n_channels: usize, samples: Vec<f64>) -> Result<Self> {
        let names = (0..n_channels).map(|i| format!("ch{i}")).collect();
        Self::new(sample_rate_hz, names, samples)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.samples[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.samples[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self { samples, ..self.clone() }
    }
}

/// A cue onset and its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub onset_sample: usize,
    pub label: u32,
}

/// Cue-locked events with strictly increasing onsets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventList {
    events: Vec<Event>,
}

/// Size of the word vocabulary in the reference protocol.
pub const DEFAULT_VOCABULARY: u32 = 13;

impl EventList {
    /// Validates ordering and that every label is below `vocabulary`.
    pub fn new(events: Vec<Event>, vocabulary: u32) -> Result<Self> {
        for w in events.windows(2) {
            if w[1].onset_sample <= w[0].onset_sample {
                return Err(Error::invalid(
                    "events",
                    format!("onsets not strictly increasing at sample {}", w[1].onset_sample),
                ));
            }
        }
        if let Some(e) = events.iter().find(|e| e.label >= vocabulary) {
            return Err(Error::invalid("events", format!("label {} outside vocabulary of {vocabulary}", e.label)));
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Recording condition a trial was collected under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Imagined,
    Spoken,
}

impl Domain {
    pub fn code(self) -> u8 {
        match self {
            Domain::Imagined => 0,
            Domain::Spoken => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Domain::Imagined),
            1 => Some(Domain::Spoken),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Imagined => "imagined",
            Domain::Spoken => "spoken",
        }
    }
}

impl core::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imagined" => Ok(Domain::Imagined),
            "spoken" => Ok(Domain::Spoken),
            other => Err(Error::invalid("domain", format!("expected `imagined` or `spoken`, got `{other}`"))),
        }
    }
}

/// Stack of equal-length trials `[n_epochs × n_channels × n_samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    sample_rate_hz: f64,
    n_channels: usize,
    n_samples: usize,
    data: Vec<f64>,
    labels: Vec<u32>,
    domains: Vec<Domain>,
}

impl EpochSet {
    pub fn new(
        sample_rate_hz: f64,
        n_channels: usize,
        n_samples: usize,
        data: Vec<f64>,
        labels: Vec<u32>,
        domains: Vec<Domain>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz", "must be positive"));
        }
        let per_epoch = n_channels * n_samples;
        if labels.len() != domains.len() || data.len() != per_epoch * labels.len() {
            return Err(Error::Shape(format!(
                "{} values, {} labels, {} domains for epochs of {n_channels}x{n_samples}",
                data.len(),
                labels.len(),
                domains.len()
            )));
        }
        Ok(Self { sample_rate_hz, n_channels, n_samples, data, labels, domains })
    }

    pub fn empty(sample_rate_hz: f64, n_channels: usize, n_samples: usize) -> Self {
        Self { sample_rate_hz, n_channels, n_samples, data: Vec::new(), labels: Vec::new(), domains: Vec::new() }
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_epochs(&self) -> usize {
        self.labels.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Channel-major samples of epoch `i`.
    pub fn epoch(&self, i: usize) -> &[f64] {
        let len = self.n_channels * self.n_samples;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn channel(&self, epoch: usize, channel: usize) -> &[f64] {
        let start = (epoch * self.n_channels + channel) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    pub fn set_domain(&mut self, domain: Domain) {
        self.domains.iter_mut().for_each(|d| *d = domain);
    }

    /// Scales every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        let data = self.data.iter().map(|v| v * gain).collect();
        Self { data, ..self.clone() }
    }

    /// Epochs whose index satisfies `keep`, in order.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut out = Self::empty(self.sample_rate_hz, self.n_channels, self.n_samples);
        for i in (0..self.n_epochs()).filter(|&i| keep(i)) {
            out.data.extend_from_slice(self.epoch(i));
            out.labels.push(self.labels[i]);
            out.domains.push(self.domains[i]);
        }
        out
    }

    /// Concatenates two epoch sets with identical geometry.
    pub fn concat(&self, other: &EpochSet) -> Result<Self> {
        if self.n_channels != other.n_channels || self.n_samples != other.n_samples {
            return Err(Error::Shape(format!(
                "cannot concatenate {}x{} epochs with {}x{} epochs",
                self.n_channels, self.n_samples, other.n_channels, other.n_samples
            )));
        }
        let mut out = self.clone();
        out.data.extend_from_slice(&other.data);
        out.labels.extend_from_slice(&other.labels);
        out.domains.extend_from_slice(&other.domains);
        Ok(out)
    }

    /// Appends one epoch of `n_channels × n_samples` values.
    pub fn push(&mut self, epoch: &[f64], label: u32, domain: Domain) -> Result<()> {
        if epoch.len() != self.n_channels * self.n_samples {
            return Err(Error::Shape(format!(
                "epoch has {} values, expected {}",
                epoch.len(),
                self.n_channels * self.n_samples
            )));
        }
        self.data.extend_from_slice(epoch);
        self.labels.push(label);
        self.domains.push(domain);
        Ok(())
    }
}

/// `round(seconds × fs)` as a sample count.
pub fn seconds_to_samples(seconds: f64, sample_rate_hz: f64) -> usize {
    (seconds * sample_rate_hz).round().max(0.0) as usize
}
