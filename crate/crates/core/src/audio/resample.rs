use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::AudioClip;
use crate::error::{Error, Result};

pub const KAISER_BETA: f64 = 8.6;
pub const TAPS_PER_PHASE: usize = 64;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn kaiser(t: f64, half_width: f64) -> f64 {
    let r = t / half_width;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// One tap table per output phase. Phase `p` serves outputs whose position
/// in input samples is `base + p / up`; tap `j` multiplies input
/// `base - TAPS_PER_PHASE / 2 + 1 + j`. Each table sums to one.
fn phase_tables(up: u64, down: u64) -> Vec<[f64; TAPS_PER_PHASE]> {
    let cutoff = 0.5 * (up as f64 / down as f64).min(1.0);
    let half = TAPS_PER_PHASE as f64 / 2.0;
    (0..up)
        .map(|p| {
            let frac = p as f64 / up as f64;
            let mut taps = [0.0; TAPS_PER_PHASE];
            for (j, t) in taps.iter_mut().enumerate() {
                let offset = j as f64 - (half - 1.0);
                let d = frac - offset;
                *t = 2.0 * cutoff * sinc(2.0 * cutoff * d) * kaiser(d, half);
            }
            let sum: f64 = taps.iter().sum();
            taps.iter_mut().for_each(|t| *t /= sum);
            taps
        })
        .collect()
}

/// Polyphase Kaiser-windowed-sinc resampling to `target_hz`. Output length
/// is `round(n * target / source)`; equal rates return the input unchanged.
pub fn resample(clip: &AudioClip, target_hz: u32) -> Result<AudioClip> {
    if target_hz == 0 {
        return Err(Error::invalid("target_hz", "must be positive"));
    }
    let source = clip.sample_rate_hz();
    if source == target_hz {
        return Ok(clip.clone());
    }
    let g = gcd(source as u64, target_hz as u64);
    let (up, down) = (target_hz as u64 / g, source as u64 / g);
    let x = clip.samples();
    let n_out = ((x.len() as u64 * up) as f64 / down as f64).round() as usize;
    let tables = phase_tables(up, down);
    let lead = TAPS_PER_PHASE as i64 / 2 - 1;
    let mut out = vec![0.0; n_out];
    for (m, y) in out.iter_mut().enumerate() {
        let pos = m as u64 * down;
        let base = (pos / up) as i64;
        let taps = &tables[(pos % up) as usize];
        let first = base - lead;
        let mut acc = 0.0;
        for (j, &t) in taps.iter().enumerate() {
            let k = first + j as i64;
            if k >= 0 && (k as usize) < x.len() {
                acc += t * x[k as usize];
            }
        }
        *y = acc;
    }
    AudioClip::new(target_hz, out)
}
