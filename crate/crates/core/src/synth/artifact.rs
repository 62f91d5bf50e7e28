use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::signal::Recording;

/// Index of the blink-like source in [`ArtifactMixture::sources`].
pub const BLINK_SOURCE: usize = 0;

const FS_HZ: f64 = 250.0;
const SECONDS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMixture {
    /// `mixing · sources`, one channel per sensor.
    pub mixed: Recording,
    /// `EOG` (an exact copy of the blink source) and `EMG` (unrelated noise).
    pub references: Recording,
    /// Unit-variance, zero-mean sources; the blink is row [`BLINK_SOURCE`].
    pub sources: Recording,
    /// `n_channels × n_sources`.
    pub mixing: DMatrix<f64>,
}

impl ArtifactMixture {
    /// The mixture with the blink source left out.
    pub fn blink_free(&self) -> Vec<f64> {
        let (nc, ns) = (self.mixed.n_channels(), self.mixed.n_samples());
        let mut out = vec![0.0; nc * ns];
        for k in (0..self.sources.n_channels()).filter(|&k| k != BLINK_SOURCE) {
            let s = self.sources.channel(k);
            for c in 0..nc {
                let a = self.mixing[(c, k)];
                out[c * ns..(c + 1) * ns].iter_mut().zip(s).for_each(|(o, v)| *o += a * v);
            }
        }
        out
    }
}

/// Smooth bumps of ~0.2 s at irregular intervals, like eye blinks.
fn blink(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let width = 0.08 * FS_HZ;
    let mut t = rng.random_range(0.3..1.0) * FS_HZ;
    while (t as usize) < n {
        let amp = rng.random_range(0.7..1.3);
        let lo = (t - 4.0 * width).max(0.0) as usize;
        let hi = ((t + 4.0 * width) as usize).min(n);
        for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            let d = (i as f64 - t) / width;
            *v += amp * (-0.5 * d * d).exp();
        }
        t += rng.random_range(1.5..3.5) * FS_HZ;
    }
    x
}

fn waveform(kind: usize, n: usize) -> Vec<f64> {
    // Frequencies are incommensurate so sources stay independent.
    let cycle = kind / 3;
    let freq = [7.3, 3.1, 11.7][kind % 3] * (1.0 + 0.37 * cycle as f64);
    (0..n)
        .map(|i| {
            let phase = (freq * i as f64 / FS_HZ + 0.13 * kind as f64).fract();
            match kind % 3 {
                0 => (TAU * phase).sin(),
                1 => {
                    if phase < 0.5 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => 2.0 * phase - 1.0,
            }
        })
        .collect()
}

fn standardize(x: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    x.iter_mut().for_each(|v| *v = (*v - mean) / sd);
}

/// Independent sources (a blink-like burst train plus sine, square and
/// sawtooth waves) mixed into `n_channels` sensors by a seeded full-rank
/// matrix. 40 s at 250 Hz.
pub fn generate_artifact_mixture(seed: u64, n_channels: usize, n_sources: usize) -> Result<ArtifactMixture> {
    if n_sources == 0 || n_sources > n_channels {
        return Err(Error::invalid("n_sources", alloc::format!("{n_sources} must be in [1, n_channels = {n_channels}]")));
    }
    let n = (SECONDS * FS_HZ) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources = Vec::with_capacity(n_sources * n);
    let mut b = blink(n, &mut rng);
    standardize(&mut b);
    sources.extend_from_slice(&b);
    for k in 1..n_sources {
        let mut w = waveform(k - 1, n);
        standardize(&mut w);
        sources.extend(w);
    }
    let mixing = loop {
        let m = DMatrix::from_fn(n_channels, n_sources, |_, _| StandardNormal.sample(&mut rng));
        let sv = m.clone().singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if lo > 0.05 * hi {
            break m;
        }
    };
    let s = DMatrix::from_row_slice(n_sources, n, &sources);
    let x = &mixing * &s;
    let mixed: Vec<f64> = (0..n_channels).flat_map(|c| x.row(c).iter().copied().collect::<Vec<_>>()).collect();
    let mut emg: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    standardize(&mut emg);
    let mut refs = b;
    refs.extend(emg);
    let names = |prefix: &str, k: usize| (0..k).map(|i| alloc::format!("{prefix}{i}")).collect::<Vec<_>>();
    Ok(ArtifactMixture {
        mixed: Recording::new(FS_HZ, names("ch", n_channels), mixed)?,
        references: Recording::new(FS_HZ, vec!["EOG".into(), "EMG".into()], refs)?,
        sources: Recording::new(FS_HZ, names("src", n_sources), sources)?,
        mixing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn rank_and_blink_copy() {
        let m = generate_artifact_mixture(1, 8, 4).unwrap();
        assert_eq!(m.mixed.n_channels(), 8);
        let sv = m.mixing.clone().singular_values();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-9).count(), 4);
        assert_eq!(pearson(m.sources.channel(BLINK_SOURCE), m.references.channel(0)), 1.0);
        // Sources are close to uncorrelated.
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(pearson(m.sources.channel(i), m.sources.channel(j)).abs() < 0.1, "{i} {j}");
            }
        }
        assert!(pearson(m.references.channel(1), m.sources.channel(BLINK_SOURCE)).abs() < 0.05);
    }

    #[test]
    fn blink_free_plus_blink_is_mixture() {
        let m = generate_artifact_mixture(2, 6, 3).unwrap();
        let clean = m.blink_free();
        let ns = m.mixed.n_samples();
        for c in 0..6 {
            for t in (0..ns).step_by(97) {
                let v = clean[c * ns + t] + m.mixing[(c, BLINK_SOURCE)] * m.sources.channel(BLINK_SOURCE)[t];
                assert!((v - m.mixed.channel(c)[t]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bad_source_count() {
        assert!(generate_artifact_mixture(0, 4, 5).is_err());
        assert!(generate_artifact_mixture(0, 4, 0).is_err());
        assert_eq!(generate_artifact_mixture(9, 8, 4).unwrap(), generate_artifact_mixture(9, 8, 4).unwrap());
    }
}
