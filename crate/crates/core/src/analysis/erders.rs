use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::{next_pow2, Fft};
use crate::signal::{seconds_to_samples, EpochSet};

/// Longest Welch segment inside a time bin.
pub const MAX_SEGMENT: usize = 128;

/// Which channels a grid averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Channel(usize),
    Average,
}

/// Reference band power against which changes are expressed.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Mean power of the first time bin across epochs.
    FirstBin,
    /// Externally measured power per band, e.g. from pre-trial epochs via
    /// [`ErdErsGrid::mean_band_power`].
    External(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErdErsParams {
    pub band_width_hz: f64,
    pub bin_seconds: f64,
    pub range_hz: (f64, f64),
    pub reference: Reference,
    pub scope: Scope,
}

impl Default for ErdErsParams {
    fn default() -> Self {
        Self {
            band_width_hz: 20.0,
            bin_seconds: 0.25,
            range_hz: (30.0, 120.0),
            reference: Reference::FirstBin,
            scope: Scope::Average,
        }
    }
}

/// Relative band-power change in percent, `n_bands × n_bins` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErdErsGrid {
    pub bands: Vec<(f64, f64)>,
    pub time_bins: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    /// Absolute band power before normalization, same layout as `values`.
    pub power: Vec<f64>,
    pub scope: Scope,
}

impl ErdErsGrid {
    pub fn get(&self, band: usize, bin: usize) -> f64 {
        self.values[band * self.time_bins.len() + bin]
    }

    /// Position of the largest value as `(band, bin)`.
    pub fn argmax(&self) -> (usize, usize) {
        let nb = self.time_bins.len();
        let i = (0..self.values.len()).fold(0, |best, i| if self.values[i] > self.values[best] { i } else { best });
        (i / nb, i % nb)
    }

    /// Per-band power averaged over all time bins.
    pub fn mean_band_power(&self) -> Vec<f64> {
        let nb = self.time_bins.len();
        (0..self.bands.len())
            .map(|b| self.power[b * nb..(b + 1) * nb].iter().sum::<f64>() / nb as f64)
            .collect()
    }
}

/// Tiles `[low, high)` in `width` steps, truncating the final band.
pub fn band_tiling(low: f64, high: f64, width: f64) -> Vec<(f64, f64)> {
    let mut bands = Vec::new();
    let mut start = low;
    while start < high - 1e-9 {
        let end = (start + width).min(high);
        bands.push((start, end));
        start = end;
    }
    bands
}

struct Welch {
    segment: usize,
    step: usize,
    window: Vec<f64>,
    fft: Fft,
    scale: f64,
}

impl Welch {
    fn new(segment: usize, fs: f64) -> Self {
        let window: Vec<f64> =
            (0..segment).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment as f64).cos()).collect();
        let energy: f64 = window.iter().map(|w| w * w).sum();
        Self { segment, step: (segment / 2).max(1), fft: Fft::new(next_pow2(segment)), scale: 1.0 / (fs * energy), window }
    }

    /// One-sided PSD averaged over half-overlapping Hann segments.
    fn psd(&self, x: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let nfft = self.fft.len();
        let mut count = 0;
        let mut start = 0;
        while start + self.segment <= x.len() {
            let seg = &x[start..start + self.segment];
            let mean = seg.iter().sum::<f64>() / self.segment as f64;
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for (i, (&v, &w)) in seg.iter().zip(&self.window).enumerate() {
                buf[i] = Complex64::new((v - mean) * w, 0.0);
            }
            self.fft.forward(buf);
            for (k, o) in out.iter_mut().enumerate() {
                let edge = k == 0 || k == nfft / 2;
                *o += buf[k].norm_sqr() * self.scale * if edge { 1.0 } else { 2.0 };
            }
            count += 1;
            start += self.step;
        }
        out.iter_mut().for_each(|v| *v /= count as f64);
    }
}

/// Band-power changes `100 × (P − R) / R` per band and time bin.
///
/// `P` is the Welch power (Hann window of `min(bin, 128)` samples, 50 %
/// overlap, segment mean removed) summed over the band's frequency bins,
/// averaged over epochs and scope channels.
pub fn erd_ers(epochs: &EpochSet, params: &ErdErsParams) -> Result<ErdErsGrid> {
    let fs = epochs.sample_rate_hz();
    let (low, high) = params.range_hz;
    if !(low > 0.0 && high > low && high <= fs / 2.0) {
        return Err(Error::invalid("range_hz", format!("({low}, {high}) must lie within (0, {}]", fs / 2.0)));
    }
    if !(params.band_width_hz > 0.0) {
        return Err(Error::invalid("band_width_hz", "must be positive"));
    }
    let bin_len = seconds_to_samples(params.bin_seconds, fs);
    if bin_len < 2 || bin_len > epochs.n_samples() {
        return Err(Error::invalid("bin_seconds", format!("{bin_len}-sample bins do not fit the epochs")));
    }
    if epochs.n_epochs() == 0 {
        return Err(Error::invalid("epochs", "no epochs"));
    }
    let channels: Vec<usize> = match params.scope {
        Scope::Average => (0..epochs.n_channels()).collect(),
        Scope::Channel(c) if c < epochs.n_channels() => vec![c],
        Scope::Channel(c) => return Err(Error::invalid("scope", format!("channel {c} out of range"))),
    };

    let n_bins = epochs.n_samples() / bin_len;
    let bands = band_tiling(low, high, params.band_width_hz);
    let welch = Welch::new(bin_len.min(MAX_SEGMENT), fs);
    let nfft = welch.fft.len();
    let df = fs / nfft as f64;
    let band_bins: Vec<Vec<usize>> = bands
        .iter()
        .map(|&(lo, hi)| (0..=nfft / 2).filter(|&k| k as f64 * df >= lo && (k as f64 * df) < hi).collect())
        .collect();
    if let Some(b) = band_bins.iter().position(|k| k.is_empty()) {
        return Err(Error::invalid(
            "band_width_hz",
            format!("band {:?} holds no frequency bin at {df} Hz resolution", bands[b]),
        ));
    }

    let mut power = vec![0.0; bands.len() * n_bins];
    let mut psd = vec![0.0; nfft / 2 + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for e in 0..epochs.n_epochs() {
        for &c in &channels {
            let x = epochs.channel(e, c);
            for t in 0..n_bins {
                welch.psd(&x[t * bin_len..(t + 1) * bin_len], &mut psd, &mut buf);
                for (b, ks) in band_bins.iter().enumerate() {
                    power[b * n_bins + t] += ks.iter().map(|&k| psd[k]).sum::<f64>() * df;
                }
            }
        }
    }
    let count = (epochs.n_epochs() * channels.len()) as f64;
    power.iter_mut().for_each(|p| *p /= count);

    let reference: Vec<f64> = match &params.reference {
        Reference::FirstBin => (0..bands.len()).map(|b| power[b * n_bins]).collect(),
        Reference::External(r) if r.len() == bands.len() => r.clone(),
        Reference::External(r) => {
            return Err(Error::Shape(format!("{} reference powers for {} bands", r.len(), bands.len())))
        }
    };
    if let Some(b) = reference.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Degenerate(format!("reference power of band {:?} is zero", bands[b])));
    }
    let values = power
        .iter()
        .enumerate()
        .map(|(i, &p)| 100.0 * (p - reference[i / n_bins]) / reference[i / n_bins])
        .collect();
    let bin_s = bin_len as f64 / fs;
    let time_bins = (0..n_bins).map(|t| (t as f64 * bin_s, (t + 1) as f64 * bin_s)).collect();
    Ok(ErdErsGrid { bands, time_bins, values, power, scope: params.scope })
}
