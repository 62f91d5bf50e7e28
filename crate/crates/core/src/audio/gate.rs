use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::stft::{istft, stft, Stft};
use super::AudioClip;
use crate::error::{Error, Result};

/// Where per-bin thresholds come from.
#[derive(Debug, Clone, Copy)]
pub enum NoiseReference<'a> {
    /// Mean plus `n_std` standard deviations of a noise-only clip's magnitudes.
    Profile(&'a AudioClip),
    /// Per-bin percentile of the clip's own magnitudes, times `scale`.
    Percentile { percentile: f64, scale: f64 },
}

impl Default for NoiseReference<'_> {
    fn default() -> Self {
        NoiseReference::Percentile { percentile: 20.0, scale: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub n_fft: usize,
    pub hop: usize,
    pub n_std: f64,
    pub sigmoid_width: f64,
    /// Smoothing neighbourhood as (frames, bins); both odd.
    pub smoothing: (usize, usize),
}

impl Default for GateParams {
    fn default() -> Self {
        Self { n_fft: 2048, hop: 512, n_std: 1.5, sigmoid_width: 0.25, smoothing: (3, 3) }
    }
}

fn magnitudes(spec: &Stft, frames: core::ops::Range<usize>, bins: usize) -> Vec<Vec<f64>> {
    (0..bins).map(|k| frames.clone().map(|f| spec.frames[f][k].norm()).collect()).collect()
}

fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

fn thresholds(spec: &Stft, reference: NoiseReference<'_>, params: &GateParams, rate: u32) -> Result<Vec<f64>> {
    let bins = params.n_fft / 2 + 1;
    match reference {
        NoiseReference::Profile(profile) => {
            if profile.sample_rate_hz() != rate {
                return Err(Error::invalid(
                    "noise_profile",
                    format!("sample rate {} differs from clip rate {rate}", profile.sample_rate_hz()),
                ));
            }
            if profile.len() < params.n_fft {
                return Err(Error::TooShort { required: params.n_fft, actual: profile.len() });
            }
            let noise = stft(profile.samples(), params.n_fft, params.hop)?;
            Ok(magnitudes(&noise, 0..noise.n_frames(), bins)
                .into_iter()
                .map(|m| {
                    let n = m.len() as f64;
                    let mean = m.iter().sum::<f64>() / n;
                    let var = m.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    mean + params.n_std * var.sqrt()
                })
                .collect())
        }
        NoiseReference::Percentile { percentile: q, scale } => {
            if !(0.0..=100.0).contains(&q) {
                return Err(Error::invalid("percentile", format!("{q} is outside [0, 100]")));
            }
            if !(scale > 0.0) {
                return Err(Error::invalid("scale", "must be positive"));
            }
            Ok(magnitudes(spec, 0..spec.n_frames(), bins)
                .into_iter()
                .map(|mut m| scale * percentile(&mut m, q))
                .collect())
        }
    }
}

fn check_params(params: &GateParams) -> Result<()> {
    let (t, f) = params.smoothing;
    if t % 2 == 0 || f % 2 == 0 {
        return Err(Error::invalid("smoothing", format!("{t}x{f} must be odd in both directions")));
    }
    if !(params.sigmoid_width > 0.0) || !(params.n_std >= 0.0) {
        return Err(Error::invalid("sigmoid_width", "width must be positive and n_std non-negative"));
    }
    Ok(())
}

/// Smoothed soft mask over the one-sided bins, indexed `[frame][bin]`.
pub fn gate_mask(clip: &AudioClip, reference: NoiseReference<'_>, params: &GateParams) -> Result<Vec<Vec<f64>>> {
    let spec = stft(clip.samples(), params.n_fft, params.hop)?;
    mask_for(&spec, clip, reference, params)
}

fn mask_for(spec: &Stft, clip: &AudioClip, reference: NoiseReference<'_>, params: &GateParams) -> Result<Vec<Vec<f64>>> {
    check_params(params)?;
    if clip.len() < 2 * params.n_fft {
        return Err(Error::TooShort { required: 2 * params.n_fft, actual: clip.len() });
    }
    let bins = params.n_fft / 2 + 1;
    let thr = thresholds(spec, reference, params, clip.sample_rate_hz())?;
    let raw: Vec<Vec<f64>> = spec
        .frames
        .iter()
        .map(|frame| {
            (0..bins)
                .map(|k| {
                    let mag = frame[k].norm();
                    if thr[k] > 0.0 {
                        1.0 / (1.0 + (-(mag - thr[k]) / (params.sigmoid_width * thr[k])).exp())
                    } else if mag > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let (rt, rf) = (params.smoothing.0 / 2, params.smoothing.1 / 2);
    let n_frames = raw.len();
    Ok((0..n_frames)
        .map(|f| {
            (0..bins)
                .map(|k| {
                    let (f0, f1) = (f.saturating_sub(rt), (f + rt).min(n_frames - 1));
                    let (k0, k1) = (k.saturating_sub(rf), (k + rf).min(bins - 1));
                    let mut sum = 0.0;
                    for row in &raw[f0..=f1] {
                        sum += row[k0..=k1].iter().sum::<f64>();
                    }
                    sum / ((f1 - f0 + 1) * (k1 - k0 + 1)) as f64
                })
                .collect()
        })
        .collect())
}

/// Stationary spectral gating: attenuates time-frequency cells whose
/// magnitude falls below a per-bin noise threshold.
pub fn spectral_gate(clip: &AudioClip, reference: NoiseReference<'_>, params: &GateParams) -> Result<AudioClip> {
    let mut spec = stft(clip.samples(), params.n_fft, params.hop)?;
    let mask = mask_for(&spec, clip, reference, params)?;
    let n = params.n_fft;
    for (frame, m) in spec.frames.iter_mut().zip(&mask) {
        for k in 0..=n / 2 {
            frame[k] *= m[k];
            if k > 0 && k < n / 2 {
                frame[n - k] *= m[k];
            }
        }
    }
    let out = istft(&spec)?;
    AudioClip::new(clip.sample_rate_hz(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    const FS: u32 = 22_050;

    fn tone(amp: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * 440.0 * i as f64 / FS as f64).sin()).collect()
    }

    fn noise(sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn snr_db(clean: &[f64], x: &[f64]) -> f64 {
        let s: f64 = clean.iter().map(|v| v * v).sum();
        let e: f64 = clean.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        10.0 * (s / e).log10()
    }

    #[test]
    fn silence_stays_silent() {
        let z = AudioClip::new(FS, vec![0.0; 8192]).unwrap();
        let out = spectral_gate(&z, NoiseReference::Profile(&z), &GateParams::default()).unwrap();
        assert!(out.samples().iter().all(|v| v.abs() < 1e-9));
        let out = spectral_gate(&z, NoiseReference::default(), &GateParams::default()).unwrap();
        assert!(out.samples().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn tone_in_white_noise_gains_ten_db() {
        let n = 2 * FS as usize;
        let clean = tone(0.2, n);
        // Tone power 0.02 equals the noise variance: 0 dB input SNR.
        let sigma = 0.02f64.sqrt();
        let noisy: Vec<f64> = clean.iter().zip(noise(sigma, n, 1)).map(|(a, b)| a + b).collect();
        let profile = AudioClip::new(FS, noise(sigma, n, 2)).unwrap();
        let clip = AudioClip::new(FS, noisy).unwrap();
        let before = snr_db(&clean, clip.samples());
        assert!(before.abs() < 0.2);
        let out = spectral_gate(&clip, NoiseReference::Profile(&profile), &GateParams::default()).unwrap();
        let after = snr_db(&clean, out.samples());
        assert!(after - before >= 10.0, "SNR {before:.2} -> {after:.2} dB");
    }

    #[test]
    fn dominant_threshold_mask_is_below_half() {
        let n = 16_384;
        let clip = AudioClip::new(FS, tone(0.2, n)).unwrap();
        let profile = AudioClip::new(FS, tone(0.8, n)).unwrap();
        let mask = gate_mask(&clip, NoiseReference::Profile(&profile), &GateParams::default()).unwrap();
        let worst = mask.iter().flatten().fold(0.0f64, |a, &v| a.max(v));
        assert!(worst < 0.5, "max mask {worst}");
        let out = spectral_gate(&clip, NoiseReference::Profile(&profile), &GateParams::default()).unwrap();
        assert!(out.energy() < 0.25 * clip.energy());
    }

    #[test]
    fn energy_never_increases() {
        let n = 10_000;
        for seed in 0..4 {
            let x: Vec<f64> = tone(0.3, n).iter().zip(noise(0.1, n, seed)).map(|(a, b)| a + b).collect();
            let clip = AudioClip::new(FS, x).unwrap();
            let profile = AudioClip::new(FS, noise(0.1, 5000, seed + 10)).unwrap();
            for reference in [NoiseReference::Profile(&profile), NoiseReference::default()] {
                let out = spectral_gate(&clip, reference, &GateParams::default()).unwrap();
                assert!(out.energy() <= clip.energy() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn length_and_parameter_errors() {
        let short = AudioClip::new(FS, vec![0.1; 4095]).unwrap();
        assert_eq!(
            spectral_gate(&short, NoiseReference::default(), &GateParams::default()),
            Err(Error::TooShort { required: 4096, actual: 4095 })
        );
        let clip = AudioClip::new(FS, vec![0.1; 5000]).unwrap();
        let params = GateParams { smoothing: (2, 3), ..Default::default() };
        assert!(spectral_gate(&clip, NoiseReference::default(), &params).is_err());
        let other_rate = AudioClip::new(16_000, vec![0.1; 5000]).unwrap();
        assert!(spectral_gate(&clip, NoiseReference::Profile(&other_rate), &GateParams::default()).is_err());
    }
}
