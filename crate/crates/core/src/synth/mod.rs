//! Synthetic ground truth: class-conditioned multichannel epochs in two
//! domains, artifact mixtures for ICA, and simple audio signals.

mod artifact;
mod pink;

pub use artifact::{generate_artifact_mixture, ArtifactMixture, BLINK_SOURCE};
pub use pink::pink_noise;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{gemm, spectral_norm, Strided};
use crate::signal::{Domain, EpochSet, Event, EventList, Recording};

const DIRECTION_STREAM: u64 = 0;
const MIXING_STREAM: u64 = 1;
const FILL_STREAM: u64 = 2;
const EPOCH_STREAM_BASE: u64 = 16;
const MAX_COSINE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Spectral exponent of the background: PSD ∝ 1/f^alpha.
    pub alpha: f64,
    /// Background standard deviation per channel.
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { alpha: 1.0, sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainShift {
    /// Spectral norm of the channel-mixing perturbation.
    pub epsilon: f64,
    /// Standard deviation of additive white sensor noise.
    pub noise_sigma: f64,
}

impl Default for DomainShift {
    fn default() -> Self {
        Self { epsilon: 0.15, noise_sigma: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_channels: usize,
    pub n_classes: usize,
    pub trials_per_class: usize,
    pub epoch_seconds: f64,
    pub fs_hz: f64,
    /// Unit vectors, one per class. Drawn from the seed when `None`.
    pub planted_directions: Option<Vec<Vec<f64>>>,
    /// Variance gain along each class direction.
    pub boost: Vec<f64>,
    pub noise_model: NoiseModel,
    pub domain_shift: DomainShift,
    pub seed: u64,
    /// Accepts `boost == 1`, which removes all class information.
    pub allow_unit_boost: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_channels: 64,
            n_classes: 13,
            trials_per_class: 50,
            epoch_seconds: 2.0,
            fs_hz: 1000.0,
            planted_directions: None,
            boost: vec![6.0; 13],
            noise_model: NoiseModel::default(),
            domain_shift: DomainShift::default(),
            seed: 0,
            allow_unit_boost: false,
        }
    }
}

impl SynthSpec {
    /// Default spec resized to the given geometry with a uniform boost.
    pub fn with_geometry(n_channels: usize, n_classes: usize, trials_per_class: usize, boost: f64, seed: u64) -> Self {
        Self { n_channels, n_classes, trials_per_class, boost: vec![boost; n_classes], seed, ..Self::default() }
    }

    pub fn n_samples(&self) -> usize {
        crate::signal::seconds_to_samples(self.epoch_seconds, self.fs_hz)
    }

    pub fn n_trials(&self) -> usize {
        self.n_classes * self.trials_per_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 2 {
            return Err(Error::invalid("n_channels", "at least 2 channels"));
        }
        if self.n_classes < 2 || self.n_classes > self.n_channels {
            return Err(Error::invalid("n_classes", format!("{} must be in [2, n_channels]", self.n_classes)));
        }
        if self.trials_per_class == 0 {
            return Err(Error::invalid("trials_per_class", "must be positive"));
        }
        if !(self.fs_hz > 0.0) || !(self.epoch_seconds > 0.0) || self.n_samples() < 2 {
            return Err(Error::invalid("epoch_seconds", "epochs need at least 2 samples"));
        }
        if self.boost.len() != self.n_classes {
            return Err(Error::invalid("boost", format!("{} gains for {} classes", self.boost.len(), self.n_classes)));
        }
        let floor_ok = |b: f64| if self.allow_unit_boost { b >= 1.0 } else { b > 1.0 };
        if let Some(b) = self.boost.iter().find(|&&b| !(b.is_finite() && floor_ok(b))) {
            return Err(Error::invalid("boost", format!("{b} must exceed 1")));
        }
        let NoiseModel { alpha, sigma } = self.noise_model;
        if !(alpha.is_finite() && alpha >= 0.0) || !(sigma > 0.0) {
            return Err(Error::invalid("noise_model", "alpha must be >= 0 and sigma > 0"));
        }
        let DomainShift { epsilon, noise_sigma } = self.domain_shift;
        if !(epsilon >= 0.0) || !(noise_sigma >= 0.0) {
            return Err(Error::invalid("domain_shift", "epsilon and noise_sigma must be >= 0"));
        }
        if let Some(dirs) = &self.planted_directions {
            check_directions(dirs, self.n_classes, self.n_channels)?;
        }
        Ok(())
    }
}

fn check_directions(dirs: &[Vec<f64>], n_classes: usize, n_channels: usize) -> Result<()> {
    if dirs.len() != n_classes || dirs.iter().any(|d| d.len() != n_channels) {
        return Err(Error::invalid("planted_directions", format!("need {n_classes} vectors of length {n_channels}")));
    }
    for (i, d) in dirs.iter().enumerate() {
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("planted_directions", format!("direction {i} has norm {norm}")));
        }
        for (j, e) in dirs.iter().enumerate().skip(i + 1) {
            let cos: f64 = d.iter().zip(e).map(|(a, b)| a * b).sum();
            if cos.abs() >= MAX_COSINE {
                return Err(Error::invalid("planted_directions", format!("|cos({i}, {j})| = {:.3}", cos.abs())));
            }
        }
    }
    Ok(())
}

/// Everything needed to check an estimate against what was planted.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub directions: Vec<Vec<f64>>,
    pub boost: Vec<f64>,
    /// Spoken-domain channel mixing `I + εR` with `‖R‖₂ = 1`.
    pub mixing: DMatrix<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub imagined: EpochSet,
    pub spoken: EpochSet,
    pub truth: GroundTruth,
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_directions(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let mut rng = stream(spec.seed, DIRECTION_STREAM);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(spec.n_classes);
    while dirs.len() < spec.n_classes {
        let mut v: Vec<f64> = (0..spec.n_channels).map(|_| StandardNormal.sample(&mut rng)).collect();
        for d in &dirs {
            let p: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(d).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            dirs.push(v);
        }
    }
    dirs
}

fn draw_mixing(spec: &SynthSpec) -> DMatrix<f64> {
    let n = spec.n_channels;
    let mut rng = stream(spec.seed, MIXING_STREAM);
    let r = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let norm = spectral_norm(&r);
    DMatrix::identity(n, n) + r * (spec.domain_shift.epsilon / norm)
}

/// One imagined-style epoch, channel-major: pink background plus a pink
/// source along the class direction carrying the extra variance.
fn imagined_epoch(spec: &SynthSpec, direction: &[f64], boost: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (nc, ns) = (spec.n_channels, spec.n_samples());
    let NoiseModel { alpha, sigma } = spec.noise_model;
    let mut x = pink_noise(rng, nc + 1, ns, alpha);
    let (background, source) = x.split_at_mut(nc * ns);
    let gain = sigma * (boost - 1.0).sqrt();
    for c in 0..nc {
        let w = gain * direction[c];
        for (b, s) in background[c * ns..(c + 1) * ns].iter_mut().zip(source.iter()) {
            *b = sigma * *b + w * s;
        }
    }
    x.truncate(nc * ns);
    x
}

/// Generates both domains. Trial `t` has class `t % n_classes`; each trial
/// draws from its own counter-derived stream, so output does not depend on
/// generation order.
pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let directions = match &spec.planted_directions {
        Some(d) => d.clone(),
        None => draw_directions(spec),
    };
    let mixing = draw_mixing(spec);
    let (nc, ns, n) = (spec.n_channels, spec.n_samples(), spec.n_trials());
    let labels: Vec<u32> = (0..n).map(|t| (t % spec.n_classes) as u32).collect();

    let mut imagined = Vec::with_capacity(n * nc * ns);
    let mut spoken = Vec::with_capacity(n * nc * ns);
    for (t, &label) in labels.iter().enumerate() {
        let class = label as usize;
        let mut rng = stream(spec.seed, EPOCH_STREAM_BASE + 2 * t as u64);
        imagined.extend(imagined_epoch(spec, &directions[class], spec.boost[class], &mut rng));

        let mut rng = stream(spec.seed, EPOCH_STREAM_BASE + 2 * t as u64 + 1);
        let source = imagined_epoch(spec, &directions[class], spec.boost[class], &mut rng);
        let mixed = gemm(Strided::of(&mixing), Strided::row_major(&source, nc, ns))?;
        let noise_sigma = spec.domain_shift.noise_sigma;
        for v in mixed {
            let e: f64 = StandardNormal.sample(&mut rng);
            spoken.push(v + noise_sigma * e);
        }
    }
    let imagined = EpochSet::new(spec.fs_hz, nc, ns, imagined, labels.clone(), vec![Domain::Imagined; n])?;
    let spoken = EpochSet::new(spec.fs_hz, nc, ns, spoken, labels, vec![Domain::Spoken; n])?;
    Ok(SynthData {
        imagined,
        spoken,
        truth: GroundTruth { directions, boost: spec.boost.clone(), mixing, seed: spec.seed },
    })
}

/// Lays epochs out as a continuous recording with `gap_seconds` of
/// background noise before each trial and after the last one, returning the
/// events marking each trial onset.
pub fn to_recording(spec: &SynthSpec, epochs: &EpochSet, gap_seconds: f64) -> Result<(Recording, EventList)> {
    let gap = crate::signal::seconds_to_samples(gap_seconds, epochs.sample_rate_hz());
    let (nc, ns, n) = (epochs.n_channels(), epochs.n_samples(), epochs.n_epochs());
    let total = n * (gap + ns) + gap;
    let domain_offset = epochs.domains().first().map_or(0, |d| d.code() as u64);
    let mut rng = stream(spec.seed, FILL_STREAM + 1000 * domain_offset);
    let mut samples = vec![0.0; nc * total];
    // Each gap gets its own short pink segment, in time order.
    for g in 0..=n {
        let start = g * (gap + ns);
        let fill = pink_noise(&mut rng, nc, gap, spec.noise_model.alpha);
        for c in 0..nc {
            let dst = &mut samples[c * total + start..c * total + start + gap];
            dst.iter_mut().zip(&fill[c * gap..(c + 1) * gap]).for_each(|(d, &v)| *d = v * spec.noise_model.sigma);
        }
    }
    let mut events = Vec::with_capacity(n);
    for e in 0..n {
        let onset = gap + e * (gap + ns);
        for c in 0..nc {
            samples[c * total + onset..c * total + onset + ns].copy_from_slice(epochs.channel(e, c));
        }
        events.push(Event { onset_sample: onset, label: epochs.labels()[e] });
    }
    let vocabulary = epochs.labels().iter().max().map_or(1, |&m| m + 1).max(crate::signal::DEFAULT_VOCABULARY);
    Ok((Recording::with_default_names(epochs.sample_rate_hz(), nc, samples)?, EventList::new(events, vocabulary)?))
}

/// `amplitude · sin(2π f t)` sampled at `fs_hz`.
pub fn sine(fs_hz: f64, freq_hz: f64, amplitude: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| amplitude * (core::f64::consts::TAU * freq_hz * i as f64 / fs_hz).sin()).collect()
}

/// Seeded white Gaussian noise.
pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
}
