use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::fft::{next_pow2, Fft};

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `n_channels` independent unit-variance channels of length `n_samples`
/// with power spectrum proportional to `1/f^alpha`, channel-major.
///
/// White Gaussian spectra are shaped by `f^(-alpha/2)` and inverted on a
/// power-of-two grid, then truncated. Two real channels share one complex
/// inverse transform.
pub fn pink_noise<R: Rng>(rng: &mut R, n_channels: usize, n_samples: usize, alpha: f64) -> Vec<f64> {
    let n = next_pow2(n_samples.max(2));
    let fft = Fft::new(n);
    let weights: Vec<f64> = (0..=n / 2).map(|k| if k == 0 { 0.0 } else { (k as f64).powf(-alpha / 2.0) }).collect();
    // Expected sum over all n bins of |W_k g_k|^2 with E|g_k|^2 = 1.
    let power: f64 = (1..n / 2).map(|k| 2.0 * weights[k] * weights[k]).sum::<f64>() + weights[n / 2] * weights[n / 2];
    let scale = n as f64 / power.sqrt();
    let half = core::f64::consts::FRAC_1_SQRT_2;

    let mut out = vec![0.0; n_channels * n_samples];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut c = 0;
    while c < n_channels {
        let paired = c + 1 < n_channels;
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for k in 1..n / 2 {
            let a = Complex64::new(gaussian(rng), gaussian(rng)) * (half * weights[k]);
            let b = if paired { Complex64::new(gaussian(rng), gaussian(rng)) * (half * weights[k]) } else { Complex64::new(0.0, 0.0) };
            let i = Complex64::new(0.0, 1.0);
            buf[k] = a + i * b;
            buf[n - k] = a.conj() + i * b.conj();
        }
        let a_nyq = gaussian(rng) * weights[n / 2];
        let b_nyq = if paired { gaussian(rng) * weights[n / 2] } else { 0.0 };
        buf[n / 2] = Complex64::new(a_nyq, b_nyq);
        fft.inverse(&mut buf);
        for t in 0..n_samples {
            out[c * n_samples + t] = buf[t].re * scale;
            if paired {
                out[(c + 1) * n_samples + t] = buf[t].im * scale;
            }
        }
        c += if paired { 2 } else { 1 };
    }
    out
}
