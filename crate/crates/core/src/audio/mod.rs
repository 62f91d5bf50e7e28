//! Voice-track preprocessing: rational-ratio resampling and stationary
//! spectral gating.

mod gate;
mod resample;
mod stft;

pub use gate::{gate_mask, spectral_gate, GateParams, NoiseReference};
pub use resample::{resample, KAISER_BETA, TAPS_PER_PHASE};
pub use stft::{hann_periodic, istft, stft, Stft};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Sample rate the voice track is brought to before gating.
pub const VOICE_RATE_HZ: u32 = 22_050;

/// Mono clip with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate_hz: u32,
    samples: Vec<f64>,
    clipped: usize,
}

impl AudioClip {
    /// Builds a clip, clamping out-of-range samples into `[-1, 1]`. The
    /// number of clamped samples is available from [`AudioClip::clipped`].
    pub fn new(sample_rate_hz: u32, mut samples: Vec<f64>) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample_rate_hz", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("samples", format!("sample {i} is not finite")));
        }
        let mut clipped = 0;
        for v in samples.iter_mut() {
            if v.abs() > 1.0 {
                *v = v.clamp(-1.0, 1.0);
                clipped += 1;
            }
        }
        if clipped > 0 {
            log::warn!("clipped {clipped} samples to [-1, 1]");
        }
        Ok(Self { sample_rate_hz, samples, clipped })
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples clamped when this clip was produced.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn clipping_is_counted() {
        let c = AudioClip::new(8000, vec![0.5, 1.5, -2.0, -1.0]).unwrap();
        assert_eq!(c.samples(), &[0.5, 1.0, -1.0, -1.0]);
        assert_eq!(c.clipped(), 2);
        assert!(AudioClip::new(0, vec![0.0]).is_err());
        assert!(AudioClip::new(8000, vec![f64::NAN]).is_err());
    }
}
