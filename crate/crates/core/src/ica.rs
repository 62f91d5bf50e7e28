//! FastICA (symmetric decorrelation, `tanh` contrast) and removal of
//! components that track EOG/EMG reference channels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, sym_eigen_desc, symmetric_decorrelate};
use crate::signal::{EpochSet, Recording};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Whitening drops eigenvalues below this fraction of the covariance trace.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Samples fed to ICA: a continuous recording or concatenated epochs.
#[derive(Debug, Clone, Copy)]
pub enum IcaData<'a> {
    Recording(&'a Recording),
    Epochs(&'a EpochSet),
}

impl<'a> From<&'a Recording> for IcaData<'a> {
    fn from(r: &'a Recording) -> Self {
        IcaData::Recording(r)
    }
}

impl<'a> From<&'a EpochSet> for IcaData<'a> {
    fn from(e: &'a EpochSet) -> Self {
        IcaData::Epochs(e)
    }
}

impl IcaData<'_> {
    fn n_channels(&self) -> usize {
        match self {
            IcaData::Recording(r) => r.n_channels(),
            IcaData::Epochs(e) => e.n_channels(),
        }
    }

    /// Channel-major `n_channels × total` matrix.
    fn channel_major(&self) -> (Vec<f64>, usize) {
        match self {
            IcaData::Recording(r) => (r.samples().to_vec(), r.n_samples()),
            IcaData::Epochs(e) => {
                let total = e.n_epochs() * e.n_samples();
                let mut out = Vec::with_capacity(e.n_channels() * total);
                for c in 0..e.n_channels() {
                    for i in 0..e.n_epochs() {
                        out.extend_from_slice(e.channel(i, c));
                    }
                }
                (out, total)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaOptions {
    /// Defaults to the channel count (reduced to the numerical rank).
    pub n_components: Option<usize>,
    pub seed: u64,
    pub max_iter: usize,
    pub tolerance: f64,
    /// Fit on every `stride`-th sample; 1 uses all of them.
    pub stride: usize,
}

impl Default for IcaOptions {
    fn default() -> Self {
        Self { n_components: None, seed: 0, max_iter: DEFAULT_MAX_ITER, tolerance: DEFAULT_TOLERANCE, stride: 1 }
    }
}

/// Fitted decomposition. Activations are `unmixing · whitening · (x − means)`
/// and `x ≈ mixing_pseudo_inverse · activations + means`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    pub whitening: DMatrix<f64>,
    pub unmixing: DMatrix<f64>,
    pub mixing_pseudo_inverse: DMatrix<f64>,
    pub channel_means: Vec<f64>,
    pub iterations: usize,
}

impl IcaModel {
    pub fn k(&self) -> usize {
        self.unmixing.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.whitening.ncols()
    }

    /// Full unmixing `unmixing · whitening` (k × n_channels).
    pub fn separating_matrix(&self) -> DMatrix<f64> {
        &self.unmixing * &self.whitening
    }

    /// Component activations (k × n_samples, row-major).
    pub fn sources(&self, rec: &Recording) -> Result<Vec<f64>> {
        if rec.n_channels() != self.n_channels() {
            return Err(Error::Shape(format!(
                "model has {} channels, recording {}",
                self.n_channels(),
                rec.n_channels()
            )));
        }
        let sep = self.separating_matrix();
        let n = rec.n_samples();
        let mut out = vec![0.0; self.k() * n];
        for i in 0..self.k() {
            let dst = &mut out[i * n..(i + 1) * n];
            for c in 0..self.n_channels() {
                let w = sep[(i, c)];
                let mean = self.channel_means[c];
                for (d, &x) in dst.iter_mut().zip(rec.channel(c)) {
                    *d += w * (x - mean);
                }
            }
        }
        Ok(out)
    }

    /// Channels rebuilt from the components with `keep[i] == true`.
    pub fn reconstruct(&self, sources: &[f64], n_samples: usize, keep: &[bool]) -> Vec<f64> {
        let n_ch = self.n_channels();
        let mut out = vec![0.0; n_ch * n_samples];
        for c in 0..n_ch {
            let dst = &mut out[c * n_samples..(c + 1) * n_samples];
            dst.iter_mut().for_each(|v| *v = self.channel_means[c]);
            for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
                let a = self.mixing_pseudo_inverse[(c, i)];
                for (d, &s) in dst.iter_mut().zip(&sources[i * n_samples..(i + 1) * n_samples]) {
                    *d += a * s;
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits FastICA with symmetric decorrelation and `g(u) = tanh(u)`.
///
/// Converged when `max |1 − |⟨w_new, w_old⟩|| < tolerance`. Components are
/// returned in descending order of explained variance (squared norm of their
/// mixing column), each with its largest mixing coefficient positive.
pub fn fit_ica<'a>(data: impl Into<IcaData<'a>>, options: &IcaOptions) -> Result<IcaModel> {
    let data = data.into();
    let n_ch = data.n_channels();
    let (raw, total) = data.channel_major();
    let stride = options.stride.max(1);
    let n = total.div_ceil(stride);
    if n < 10 * n_ch {
        return Err(Error::invalid("data", format!("{n} samples, need at least {} (10 per channel)", 10 * n_ch)));
    }
    let requested = options.n_components.unwrap_or(n_ch);
    if requested == 0 || requested > n_ch {
        return Err(Error::invalid("n_components", format!("{requested} must be in 1..={n_ch}")));
    }

    let mut x = Vec::with_capacity(n_ch * n);
    let mut means = Vec::with_capacity(n_ch);
    for c in 0..n_ch {
        let row = &raw[c * total..(c + 1) * total];
        let mean = row.iter().sum::<f64>() / total as f64;
        means.push(mean);
        x.extend(row.iter().step_by(stride).map(|v| v - mean));
    }

    let mut cov = DMatrix::zeros(n_ch, n_ch);
    for i in 0..n_ch {
        for j in i..n_ch {
            let v = dot(&x[i * n..(i + 1) * n], &x[j * n..(j + 1) * n]) / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let (values, vectors) = sym_eigen_desc(&cov)?;
    let trace: f64 = values.iter().sum();
    let rank = values.iter().take_while(|&&v| v > RANK_TOLERANCE * trace).count();
    if rank == 0 {
        return Err(Error::RankDeficient("covariance has no eigenvalue above tolerance".into()));
    }
    let k = if requested > rank {
        log::warn!("covariance rank {rank} < {requested} requested components; reducing");
        rank
    } else {
        requested
    };

    let mut whitening = DMatrix::zeros(k, n_ch);
    let mut dewhitening = DMatrix::zeros(n_ch, k);
    for i in 0..k {
        let s = values[i].sqrt();
        for c in 0..n_ch {
            whitening[(i, c)] = vectors[(c, i)] / s;
            dewhitening[(c, i)] = vectors[(c, i)] * s;
        }
    }
    let mut z = vec![0.0; k * n];
    for i in 0..k {
        let dst = &mut z[i * n..(i + 1) * n];
        for c in 0..n_ch {
            let w = whitening[(i, c)];
            for (d, &v) in dst.iter_mut().zip(&x[c * n..(c + 1) * n]) {
                *d += w * v;
            }
        }
    }
    drop(x);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let init = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelate(&init)?;
    let mut y = vec![0.0; n];
    let mut last_delta = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let mut next = DMatrix::zeros(k, k);
        for i in 0..k {
            y.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..k {
                let wij = w[(i, j)];
                for (d, &v) in y.iter_mut().zip(&z[j * n..(j + 1) * n]) {
                    *d += wij * v;
                }
            }
            let mut mean_deriv = 0.0;
            for v in y.iter_mut() {
                let t = v.tanh();
                mean_deriv += 1.0 - t * t;
                *v = t;
            }
            mean_deriv /= n as f64;
            for j in 0..k {
                next[(i, j)] = dot(&y, &z[j * n..(j + 1) * n]) / n as f64 - mean_deriv * w[(i, j)];
            }
        }
        let next = symmetric_decorrelate(&next)?;
        last_delta = (0..k)
            .map(|i| (1.0 - next.row(i).dot(&w.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        w = next;
        if last_delta < options.tolerance {
            return Ok(finish(w, whitening, dewhitening, means, iterations));
        }
    }
    Err(Error::Convergence { iterations, last_delta })
}

fn finish(
    w: DMatrix<f64>,
    whitening: DMatrix<f64>,
    dewhitening: DMatrix<f64>,
    channel_means: Vec<f64>,
    iterations: usize,
) -> IcaModel {
    let k = w.nrows();
    let mixing = &dewhitening * w.transpose();
    let power: Vec<f64> = (0..k).map(|i| mixing.column(i).norm_squared()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]).then(a.cmp(&b)));

    let mut unmixing = DMatrix::zeros(k, k);
    let mut mixing_sorted = DMatrix::zeros(mixing.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = mixing.column(src).iter().copied().collect();
        let before = col.clone();
        canonical_sign(&mut col);
        let sign = if col == before { 1.0 } else { -1.0 };
        for (r, v) in col.into_iter().enumerate() {
            mixing_sorted[(r, dst)] = v;
        }
        for j in 0..k {
            unmixing[(dst, j)] = sign * w[(src, j)];
        }
    }
    IcaModel { whitening, unmixing, mixing_pseudo_inverse: mixing_sorted, channel_means, iterations }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Outcome of reference-guided component removal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub cleaned: Recording,
    /// Component indices that were zeroed.
    pub rejected: Vec<usize>,
    /// Per component, the largest |Pearson r| with any reference channel.
    pub max_correlations: Vec<f64>,
}

/// Zeros every component whose largest |Pearson r| with a reference channel
/// exceeds `threshold` and rebuilds the channels from the rest.
pub fn reject_components(model: &IcaModel, data: &Recording, references: &Recording, threshold: f64) -> Result<Rejection> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid("threshold", format!("{threshold} outside (0, 1]")));
    }
    if references.n_samples() != data.n_samples() || references.sample_rate_hz() != data.sample_rate_hz() {
        return Err(Error::Alignment(format!(
            "data {} samples @ {} Hz, references {} samples @ {} Hz",
            data.n_samples(),
            data.sample_rate_hz(),
            references.n_samples(),
            references.sample_rate_hz()
        )));
    }
    let n = data.n_samples();
    let sources = model.sources(data)?;
    let max_correlations: Vec<f64> = (0..model.k())
        .map(|i| {
            let s = &sources[i * n..(i + 1) * n];
            (0..references.n_channels())
                .map(|r| pearson(s, references.channel(r)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let keep: Vec<bool> = max_correlations.iter().map(|&r| !(r > threshold)).collect();
    let rejected = keep.iter().enumerate().filter(|(_, &k)| !k).map(|(i, _)| i).collect();
    let cleaned = data.with_samples(model.reconstruct(&sources, n, &keep));
    Ok(Rejection { cleaned, rejected, max_correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::Rng;

    fn mixture(n: usize, n_ch: usize, seed: u64) -> (Recording, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources: Vec<Vec<f64>> = vec![
            (0..n).map(|t| (2.0 * PI * t as f64 / 97.0).sin()).collect(),
            (0..n).map(|t| if (t / 53) % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            (0..n).map(|t| (t % 71) as f64 / 35.5 - 1.0).collect(),
        ];
        let a = DMatrix::from_fn(n_ch, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut samples = vec![0.0; n_ch * n];
        for c in 0..n_ch {
            for (s, src) in sources.iter().enumerate() {
                for t in 0..n {
                    samples[c * n + t] += a[(c, s)] * src[t];
                }
            }
        }
        (Recording::with_default_names(250.0, n_ch, samples).unwrap(), a)
    }

    #[test]
    fn rank_reduction_and_orthonormal_rows() {
        let (rec, _) = mixture(3000, 5, 1);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        assert_eq!(model.k(), 3);
        let g = &model.unmixing * model.unmixing.transpose();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-8);
    }

    #[test]
    fn deterministic_per_seed() {
        let (rec, _) = mixture(2000, 3, 2);
        let opts = IcaOptions { seed: 42, ..Default::default() };
        assert_eq!(fit_ica(&rec, &opts).unwrap(), fit_ica(&rec, &opts).unwrap());
    }

    #[test]
    fn full_rank_reconstruction_identity() {
        let (rec, _) = mixture(2000, 3, 3);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        let s = model.sources(&rec).unwrap();
        let back = model.reconstruct(&s, rec.n_samples(), &[true; 3]);
        let scale = rec.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in back.iter().zip(rec.samples()) {
            assert!((a - b).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn variance_ordering() {
        let (rec, _) = mixture(3000, 4, 4);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        let power: Vec<f64> = (0..model.k()).map(|i| model.mixing_pseudo_inverse.column(i).norm_squared()).collect();
        assert!(power.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn preconditions() {
        let (rec, _) = mixture(20, 3, 5);
        assert!(matches!(fit_ica(&rec, &IcaOptions::default()), Err(Error::InvalidParameter { .. })));
        let (rec, _) = mixture(1000, 3, 5);
        let opts = IcaOptions { n_components: Some(4), ..Default::default() };
        assert!(fit_ica(&rec, &opts).is_err());
        let zero = Recording::with_default_names(100.0, 2, vec![1.0; 400]).unwrap();
        assert!(matches!(fit_ica(&zero, &IcaOptions::default()), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn non_convergence_reports_delta() {
        let (rec, _) = mixture(2000, 3, 6);
        let opts = IcaOptions { max_iter: 1, tolerance: 0.0, ..Default::default() };
        match fit_ica(&rec, &opts) {
            Err(Error::Convergence { iterations, last_delta }) => {
                assert_eq!(iterations, 1);
                assert!(last_delta.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_references_reject_nothing() {
        let (rec, _) = mixture(2000, 3, 7);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        let refs = Recording::with_default_names(250.0, 2, vec![0.0; 4000]).unwrap();
        let out = reject_components(&model, &rec, &refs, 0.8).unwrap();
        assert!(out.rejected.is_empty());
        let scale = rec.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in out.cleaned.samples().iter().zip(rec.samples()) {
            assert!((a - b).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn threshold_one_never_rejects() {
        let (rec, _) = mixture(2000, 3, 8);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        let s = model.sources(&rec).unwrap();
        let refs = Recording::with_default_names(250.0, 1, s[..2000].to_vec()).unwrap();
        let out = reject_components(&model, &rec, &refs, 1.0).unwrap();
        assert!(out.rejected.is_empty());
        let out = reject_components(&model, &rec, &refs, 0.99).unwrap();
        assert_eq!(out.rejected, vec![0]);
    }

    #[test]
    fn misaligned_references() {
        let (rec, _) = mixture(2000, 3, 9);
        let model = fit_ica(&rec, &IcaOptions::default()).unwrap();
        let refs = Recording::with_default_names(250.0, 1, vec![0.0; 1999]).unwrap();
        assert!(matches!(reject_components(&model, &rec, &refs, 0.8), Err(Error::Alignment(_))));
        assert!(reject_components(&model, &rec, &rec, 0.0).is_err());
    }
}
