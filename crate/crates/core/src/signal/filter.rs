use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::Recording;
use crate::error::{Error, Result};

/// One second-order section, normalized so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Transfer function at `z = e^{jω}`.
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + z1 * self.b1 + z2 * self.b2) / (1.0 + z1 * self.a1 + z2 * self.a2)
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) * 0.5, (-self.a1 - disc) * 0.5]
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    fn is_finite(&self) -> bool {
        [self.b0, self.b1, self.b2, self.a1, self.a2].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    ButterworthBandpass { order: usize, low_hz: f64, high_hz: f64 },
    Notch { center_hz: f64, q: f64 },
    Cascade,
}

/// Cascade of biquads plus the design that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
    kind: FilterKind,
    sample_rate_hz: f64,
}

impl SosFilter {
    /// Wraps raw sections, rejecting unstable or non-finite ones.
    pub fn from_sections(sections: Vec<Biquad>, kind: FilterKind, sample_rate_hz: f64) -> Result<Self> {
        for (i, s) in sections.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::DesignFailure(format!("section {i} has non-finite coefficients")));
            }
            let radius = s.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
            if !(radius < 1.0) {
                return Err(Error::DesignFailure(format!("section {i} has a pole of magnitude {radius}")));
            }
        }
        Ok(Self { sections, kind, sample_rate_hz })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Digital filter order (two per section).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.response(freq_hz).norm().log10()
    }

    /// Largest pole magnitude over all sections.
    pub fn max_pole_radius(&self) -> f64 {
        self.sections.iter().flat_map(|s| s.poles()).map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Serial composition, `self` first.
    pub fn then(&self, other: &SosFilter) -> Result<SosFilter> {
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::invalid("filter", "cannot cascade filters designed for different sample rates"));
        }
        let mut sections = self.sections.clone();
        sections.extend_from_slice(&other.sections);
        Ok(SosFilter { sections, kind: FilterKind::Cascade, sample_rate_hz: self.sample_rate_hz })
    }

    /// Runs the cascade in place over `x` with transposed direct-form II state.
    fn run(&self, x: &mut [f64], state: &mut [[f64; 2]]) {
        // Sample-outer order lets the sections' recurrences overlap.
        for v in x.iter_mut() {
            let mut input = *v;
            for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                let y = s.b0 * input + z[0];
                z[0] = s.b1 * input - s.a1 * y + z[1];
                z[1] = s.b2 * input - s.a2 * y;
                input = y;
            }
            *v = input;
        }
    }

    /// Per-section steady state for a unit step at the cascade input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z = [(g - s.b0) * level, (s.b2 - s.a2 * g) * level];
                level *= g;
                z
            })
            .collect()
    }
}

fn check_edge(name: &'static str, value: f64, fs_hz: f64) -> Result<()> {
    let nyquist = fs_hz / 2.0;
    if !(value > 0.0) {
        return Err(Error::invalid(name, format!("{value} Hz must be positive")));
    }
    if value >= nyquist {
        return Err(Error::invalid(name, format!("{value} Hz is at or above Nyquist ({nyquist} Hz)")));
    }
    Ok(())
}

/// Butterworth bandpass as cascaded biquads.
///
/// The analog low-pass prototype is shifted to a bandpass around the
/// prewarped edges and mapped with the bilinear transform, so the digital
/// response is exactly -3.01 dB at `low_hz` and `high_hz`. Each of the
/// `order` sections holds one conjugate pole pair and the zeros at z = ±1;
/// every section is scaled to unit gain at the band centre.
pub fn design_bandpass(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Result<SosFilter> {
    if !(fs_hz > 0.0) {
        return Err(Error::invalid("fs_hz", format!("{fs_hz} must be positive")));
    }
    if !(1..=12).contains(&order) {
        return Err(Error::invalid("order", format!("{order} outside 1..=12")));
    }
    check_edge("low_hz", low_hz, fs_hz)?;
    check_edge("high_hz", high_hz, fs_hz)?;
    if low_hz >= high_hz {
        return Err(Error::invalid("low_hz", format!("{low_hz} Hz must be below high_hz {high_hz} Hz")));
    }

    let fs2 = 2.0 * fs_hz;
    let warped_low = fs2 * (PI * low_hz / fs_hz).tan();
    let warped_high = fs2 * (PI * high_hz / fs_hz).tan();
    let bandwidth = warped_high - warped_low;
    let centre_sq = warped_low * warped_high;

    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        // Left-half-plane Butterworth prototype pole.
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let proto = Complex64::from_polar(1.0, theta) * (bandwidth / 2.0);
        let root = (proto * proto - centre_sq).sqrt();
        for analog in [proto + root, proto - root] {
            poles.push((fs2 + analog) / (fs2 - analog));
        }
    }

    let pairs = pair_conjugates(&poles)?;
    let centre_omega = 2.0 * (centre_sq.sqrt() / fs2).atan();
    let mut sections = Vec::with_capacity(order);
    for (p, q) in pairs {
        let mut s = Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1: -(p + q).re, a2: (p * q).re };
        let g = 1.0 / s.response(centre_omega).norm();
        s.b0 *= g;
        s.b2 *= g;
        sections.push(s);
    }
    SosFilter::from_sections(sections, FilterKind::ButterworthBandpass { order, low_hz, high_hz }, fs_hz)
}

/// Groups digital poles into conjugate pairs (or pairs of real poles).
fn pair_conjugates(poles: &[Complex64]) -> Result<Vec<(Complex64, Complex64)>> {
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= tol).map(|p| p.re).collect();
    let lower = poles.iter().filter(|p| p.im < -tol).count();
    if lower != complex.len() || !real.len().is_multiple_of(2) {
        return Err(Error::DesignFailure("poles do not form conjugate pairs".into()));
    }
    complex.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    real.sort_by(f64::total_cmp);
    let mut out: Vec<(Complex64, Complex64)> = complex.into_iter().map(|p| (p, p.conj())).collect();
    for pair in real.chunks(2) {
        out.push((Complex64::new(pair[0], 0.0), Complex64::new(pair[1], 0.0)));
    }
    Ok(out)
}

/// Single-biquad notch with unity gain at DC and Nyquist and a null at
/// `center_hz`; the -3 dB width is `center_hz / q`.
pub fn design_notch(center_hz: f64, q: f64, fs_hz: f64) -> Result<SosFilter> {
    if !(fs_hz > 0.0) {
        return Err(Error::invalid("fs_hz", format!("{fs_hz} must be positive")));
    }
    check_edge("center_hz", center_hz, fs_hz)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::invalid("q", format!("{q} must be positive")));
    }
    let w0 = 2.0 * PI * center_hz / fs_hz;
    let beta = (w0 / q / 2.0).tan();
    let gain = 1.0 / (1.0 + beta);
    let section = Biquad {
        b0: gain,
        b1: -2.0 * gain * w0.cos(),
        b2: gain,
        a1: -2.0 * gain * w0.cos(),
        a2: 2.0 * gain - 1.0,
    };
    SosFilter::from_sections(vec![section], FilterKind::Notch { center_hz, q }, fs_hz)
}

/// Zero-phase forward-backward filtering of one channel.
///
/// The signal is extended at both ends by odd reflection about its end
/// samples (`3 × order` samples each side) and each pass starts from the
/// steady state for its first sample, so constant input maps to the DC gain
/// times itself without a transient.
pub fn filtfilt_channel(filter: &SosFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = 3 * filter.order();
    let n = x.len();
    if n <= pad {
        return Err(Error::TooShort { required: pad, actual: n });
    }
    if filter.sections.is_empty() {
        return Ok(x.to_vec());
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (x[0], x[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    let unit = filter.step_state();
    let mut state: Vec<[f64; 2]> = unit.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
    filter.run(&mut ext, &mut state);
    ext.reverse();
    let mut state: Vec<[f64; 2]> = unit.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
    filter.run(&mut ext, &mut state);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Zero-phase filtering of every channel of `rec`.
pub fn filtfilt(filter: &SosFilter, rec: &Recording) -> Result<Recording> {
    if (filter.sample_rate_hz - rec.sample_rate_hz()).abs() > 1e-9 * rec.sample_rate_hz() {
        return Err(Error::invalid(
            "filter",
            format!("designed for {} Hz, recording is {} Hz", filter.sample_rate_hz, rec.sample_rate_hz()),
        ));
    }
    let mut out = Vec::with_capacity(rec.samples().len());
    for c in 0..rec.n_channels() {
        out.extend(filtfilt_channel(filter, rec.channel(c))?);
    }
    Ok(rec.with_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    /// Evaluates the cascade by expanding each section's polynomials
    /// directly rather than through `Biquad::response`.
    fn direct_magnitude(f: &SosFilter, freq: f64) -> f64 {
        let omega = 2.0 * PI * freq / f.sample_rate_hz();
        let mut mag = 1.0;
        for s in f.sections() {
            let (c1, s1, c2, s2) = (omega.cos(), omega.sin(), (2.0 * omega).cos(), (2.0 * omega).sin());
            let num_re = s.b0 + s.b1 * c1 + s.b2 * c2;
            let num_im = -(s.b1 * s1 + s.b2 * s2);
            let den_re = 1.0 + s.a1 * c1 + s.a2 * c2;
            let den_im = -(s.a1 * s1 + s.a2 * s2);
            mag *= ((num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im)).sqrt();
        }
        mag
    }

    #[test]
    fn bandpass_edges_are_minus_three_db() {
        let f = design_bandpass(5, 30.0, 120.0, 1000.0).unwrap();
        assert_eq!(f.sections().len(), 5);
        for edge in [30.0, 120.0] {
            let m = db(direct_magnitude(&f, edge));
            assert!((m + 3.0103).abs() < 0.05, "{edge} Hz: {m} dB");
        }
        assert!(db(direct_magnitude(&f, 60.0)) >= -0.5);
        assert!(f.max_pole_radius() < 1.0);
    }

    #[test]
    fn bandpass_stopband() {
        let f = design_bandpass(5, 30.0, 120.0, 1000.0).unwrap();
        // Single pass: 58.5 dB at 10 Hz but only 35.0 dB at 200 Hz; the
        // forward-backward response squares the magnitude.
        assert!(db(direct_magnitude(&f, 10.0)) <= -40.0);
        assert!((db(direct_magnitude(&f, 200.0)) + 35.02).abs() < 0.05);
        assert!(2.0 * db(direct_magnitude(&f, 200.0)) <= -40.0);
        assert!(direct_magnitude(&f, 0.0) < 1e-12);
    }

    #[test]
    fn first_order_bandpass_is_one_section() {
        let f = design_bandpass(1, 10.0, 20.0, 100.0).unwrap();
        assert_eq!(f.sections().len(), 1);
        assert_eq!(f.order(), 2);
        assert!(f.max_pole_radius() < 1.0);
    }

    #[test]
    fn bandpass_rejects_bad_edges() {
        match design_bandpass(5, 30.0, 500.0, 1000.0) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "high_hz"),
            other => panic!("unexpected {other:?}"),
        }
        match design_bandpass(5, 0.0, 100.0, 1000.0) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "low_hz"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(design_bandpass(5, 120.0, 30.0, 1000.0).is_err());
        assert!(design_bandpass(13, 30.0, 120.0, 1000.0).is_err());
        assert!(design_bandpass(0, 30.0, 120.0, 1000.0).is_err());
    }

    #[test]
    fn high_orders_stay_stable() {
        for order in 1..=12 {
            let f = design_bandpass(order, 30.0, 120.0, 1000.0).unwrap();
            assert!(f.max_pole_radius() < 1.0, "order {order}");
            assert!((db(direct_magnitude(&f, 30.0)) + 3.0103).abs() < 0.05);
        }
    }

    #[test]
    fn notch_null_and_unity_gain() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        assert!(db(direct_magnitude(&f, 60.0)) <= -40.0);
        assert!((direct_magnitude(&f, 0.0) - 1.0).abs() < 1e-6);
        assert!((direct_magnitude(&f, 500.0) - 1.0).abs() < 1e-6);
        let h = design_notch(120.0, 30.0, 1000.0).unwrap();
        assert!(db(direct_magnitude(&h, 120.0)) <= -40.0);
        assert!(design_notch(500.0, 30.0, 1000.0).is_err());
        assert!(design_notch(60.0, 0.0, 1000.0).is_err());
    }

    /// Hann-windowed averaged periodogram, bins at `k * fs / seg`.
    fn periodogram(x: &[f64], seg: usize) -> Vec<f64> {
        let fft = crate::fft::Fft::new(seg);
        let w: Vec<f64> = (0..seg).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos()).collect();
        let mut acc = vec![0.0; seg / 2 + 1];
        let mut start = 0;
        while start + seg <= x.len() {
            let mut buf: Vec<Complex64> = (0..seg).map(|i| Complex64::new(x[start + i] * w[i], 0.0)).collect();
            fft.forward(&mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, c)| *a += c.norm_sqr());
            start += seg / 2;
        }
        acc
    }

    #[test]
    fn notch_band_power_matches_analytic_response() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let fs = 1000.0;
        let f = design_notch(60.0, 30.0, fs).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..400_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = filtfilt_channel(&f, &x).unwrap();
        let seg = 16384;
        let (px, py) = (periodogram(&x, seg), periodogram(&y, seg));
        let band = |lo: f64, hi: f64| {
            let bins: Vec<usize> = (0..px.len()).filter(|&k| (lo..=hi).contains(&(k as f64 * fs / seg as f64))).collect();
            let measured = bins.iter().map(|&k| py[k]).sum::<f64>() / bins.iter().map(|&k| px[k]).sum::<f64>();
            // Oracle: forward-backward gain |H|^4 weighted by the input spectrum.
            let expected = bins.iter().map(|&k| px[k] * direct_magnitude(&f, k as f64 * fs / seg as f64).powi(4)).sum::<f64>()
                / bins.iter().map(|&k| px[k]).sum::<f64>();
            (10.0 * measured.log10(), 10.0 * expected.log10())
        };
        let (measured, expected) = band(59.0, 61.0);
        assert!((measured - expected).abs() < 1.0, "59-61 Hz: {measured} dB vs {expected} dB");
        // Q = 30 puts the half-power points at 60 +- 1 Hz, so the +-1 Hz band
        // only drops about 11 dB and the +-0.5 Hz band about 20 dB.
        assert!((expected + 11.4).abs() < 0.5, "{expected}");
        let (narrow, narrow_expected) = band(59.5, 60.5);
        assert!((narrow - narrow_expected).abs() < 1.0);
        assert!((narrow_expected + 20.0).abs() < 0.5, "{narrow_expected}");
        let (at10, _) = band(9.5, 10.5);
        assert!(at10.abs() <= 0.5, "10 Hz: {at10} dB");
        assert!(2.0 * db(direct_magnitude(&f, 10.0)).abs() <= 0.5);
    }

    #[test]
    fn constant_is_removed_without_transient() {
        let f = design_bandpass(5, 30.0, 120.0, 1000.0).unwrap();
        let x = vec![3.0; 2000];
        let y = filtfilt_channel(&f, &x).unwrap();
        let peak = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(peak < 1e-3 * 3.0, "peak {peak}");
    }

    #[test]
    fn too_short_signal() {
        let f = design_bandpass(5, 30.0, 120.0, 1000.0).unwrap();
        assert_eq!(
            filtfilt_channel(&f, &[0.0; 30]),
            Err(Error::TooShort { required: 30, actual: 30 })
        );
        assert!(filtfilt_channel(&f, &[0.0; 31]).is_ok());
    }
}
