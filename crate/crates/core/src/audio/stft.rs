use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft;

pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Short-time spectrum of a real signal. Frames hold the full `n_fft` bins.
/// The signal is zero-padded by `n_fft - hop` on the left so every original
/// sample sees the same window-square sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub n_fft: usize,
    pub hop: usize,
    pub frames: Vec<Vec<Complex64>>,
    pub signal_len: usize,
}

impl Stft {
    pub fn pad(&self) -> usize {
        self.n_fft - self.hop
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

}

fn check_geometry(n_fft: usize, hop: usize) -> Result<()> {
    if !n_fft.is_power_of_two() || n_fft < 4 {
        return Err(Error::invalid("n_fft", format!("{n_fft} is not a power of two >= 4")));
    }
    if hop == 0 || !n_fft.is_multiple_of(hop) || hop > n_fft / 2 {
        return Err(Error::invalid("hop", format!("{hop} must divide n_fft = {n_fft} at least twice")));
    }
    Ok(())
}

pub fn stft(x: &[f64], n_fft: usize, hop: usize) -> Result<Stft> {
    check_geometry(n_fft, hop)?;
    let pad = n_fft - hop;
    let n_frames = (x.len() + pad).div_ceil(hop);
    let fft = Fft::new(n_fft);
    let w = hann_periodic(n_fft);
    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let start = f * hop;
        let mut buf: Vec<Complex64> = (0..n_fft)
            .map(|i| {
                let idx = (start + i).wrapping_sub(pad);
                let v = if start + i >= pad && idx < x.len() { x[idx] } else { 0.0 };
                Complex64::new(v * w[i], 0.0)
            })
            .collect();
        fft.forward(&mut buf);
        frames.push(buf);
    }
    Ok(Stft { n_fft, hop, frames, signal_len: x.len() })
}

/// Weighted overlap-add inverse, divided by the window-square sum.
pub fn istft(spec: &Stft) -> Result<Vec<f64>> {
    check_geometry(spec.n_fft, spec.hop)?;
    let (n_fft, hop, pad) = (spec.n_fft, spec.hop, spec.pad());
    let fft = Fft::new(n_fft);
    let w = hann_periodic(n_fft);
    let total = spec.frames.len() * hop + n_fft;
    let mut acc = vec![0.0; total];
    let mut norm = vec![0.0; total];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (f, frame) in spec.frames.iter().enumerate() {
        if frame.len() != n_fft {
            return Err(Error::Shape(format!("frame {f} has {} bins, expected {n_fft}", frame.len())));
        }
        buf.copy_from_slice(frame);
        fft.inverse(&mut buf);
        let start = f * hop;
        for i in 0..n_fft {
            acc[start + i] += w[i] * buf[i].re;
            norm[start + i] += w[i] * w[i];
        }
    }
    Ok((0..spec.signal_len)
        .map(|i| {
            let k = i + pad;
            if norm[k] > 0.0 {
                acc[k] / norm[k]
            } else {
                0.0
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        for len in [4096, 5000, 10_001] {
            let x: Vec<f64> = (0..len).map(|i| ((i * 7919 % 1009) as f64 / 1009.0 - 0.5) + (i as f64 * 0.01).sin()).collect();
            let y = istft(&stft(&x, 2048, 512).unwrap()).unwrap();
            let err = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scale = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err / scale < 1e-12, "len {len}: {}", err / scale);
        }
    }

    #[test]
    fn window_square_sum_is_flat_over_signal() {
        let w = hann_periodic(2048);
        for i in 0..512 {
            let s: f64 = (0..4).map(|k| w[i + 512 * k].powi(2)).sum();
            assert!((s - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_geometry() {
        assert!(stft(&[0.0; 100], 1000, 250).is_err());
        assert!(stft(&[0.0; 100], 1024, 1024).is_err());
        assert!(stft(&[0.0; 100], 1024, 300).is_err());
    }
}
