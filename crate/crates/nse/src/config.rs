//! Pipeline configuration: built-in defaults, overridden by a JSON file,
//! overridden in turn by command-line flags.

use std::path::Path;

use nse_core::analysis::TsneParams;
use nse_core::audio::GateParams;
use nse_core::ica::IcaOptions;
use nse_core::synth::{DomainShift, NoiseModel, SynthSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fs_hz: f64,
    pub bandpass_hz: [f64; 2],
    pub filter_order: usize,
    pub notch_hz: Vec<f64>,
    pub notch_q: f64,
    pub epoch_seconds: f64,
    pub baseline_seconds: f64,
    /// Number of distinct event labels accepted in events files.
    pub vocabulary: u32,
    pub patterns_per_class: usize,
    pub ridge: f64,
    pub n_windows: usize,
    pub log_floor: f64,
    pub seed: u64,
    pub ica: IcaConfig,
    pub erders: ErdErsConfig,
    pub tsne: TsneConfig,
    pub synth: SynthConfig,
    pub audio: AudioConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fs_hz: 1000.0,
            bandpass_hz: [30.0, 120.0],
            filter_order: 5,
            notch_hz: vec![60.0, 120.0],
            notch_q: 30.0,
            epoch_seconds: 2.0,
            baseline_seconds: 0.5,
            vocabulary: nse_core::signal::DEFAULT_VOCABULARY,
            patterns_per_class: nse_core::spatial::DEFAULT_PATTERNS_PER_CLASS,
            ridge: nse_core::spatial::DEFAULT_RIDGE,
            n_windows: nse_core::embedding::DEFAULT_WINDOWS,
            log_floor: nse_core::embedding::DEFAULT_EPS,
            seed: 0,
            ica: IcaConfig::default(),
            erders: ErdErsConfig::default(),
            tsne: TsneConfig::default(),
            synth: SynthConfig::default(),
            audio: AudioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcaConfig {
    pub threshold: f64,
    pub n_components: Option<usize>,
    pub max_iter: usize,
    pub tolerance: f64,
    pub stride: usize,
}

impl Default for IcaConfig {
    fn default() -> Self {
        let o = IcaOptions::default();
        Self { threshold: nse_core::ica::DEFAULT_THRESHOLD, n_components: o.n_components, max_iter: o.max_iter, tolerance: o.tolerance, stride: o.stride }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErdErsConfig {
    pub band_width_hz: f64,
    pub bin_seconds: f64,
    pub range_hz: [f64; 2],
    /// Single channel index; all channels are averaged when absent.
    pub channel: Option<usize>,
}

impl Default for ErdErsConfig {
    fn default() -> Self {
        Self { band_width_hz: 20.0, bin_seconds: 0.25, range_hz: [30.0, 120.0], channel: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        let p = TsneParams::default();
        Self {
            perplexity: p.perplexity,
            iterations: p.iterations,
            learning_rate: p.learning_rate,
            early_exaggeration: p.early_exaggeration,
            exaggeration_iterations: p.exaggeration_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub n_classes: usize,
    pub trials_per_class: usize,
    pub boost: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    /// Background noise before each trial in the written recordings.
    pub gap_seconds: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SynthSpec::default();
        Self {
            n_channels: s.n_channels,
            n_classes: s.n_classes,
            trials_per_class: s.trials_per_class,
            boost: s.boost[0],
            alpha: s.noise_model.alpha,
            sigma: s.noise_model.sigma,
            epsilon: s.domain_shift.epsilon,
            noise_sigma: s.domain_shift.noise_sigma,
            gap_seconds: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub target_hz: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_std: f64,
    pub sigmoid_width: f64,
    pub smoothing: [usize; 2],
    pub percentile: f64,
    pub percentile_scale: f64,
}

impl Default for AudioConfig {
    fn default() -> Self {
        let g = GateParams::default();
        Self {
            target_hz: nse_core::audio::VOICE_RATE_HZ,
            n_fft: g.n_fft,
            hop: g.hop,
            n_std: g.n_std,
            sigmoid_width: g.sigmoid_width,
            smoothing: [g.smoothing.0, g.smoothing.1],
            percentile: 20.0,
            percentile_scale: 2.0,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl PipelineConfig {
    /// Defaults, or the file at `path` layered over them.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => read_json(p),
        }
    }

    pub fn epoch_samples(&self) -> usize {
        nse_core::signal::seconds_to_samples(self.epoch_seconds, self.fs_hz)
    }

    /// Cross-field checks that individual modules cannot see.
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.fs_hz / 2.0;
        if !(self.fs_hz > 0.0) {
            return Err(invalid("fs_hz must be positive"));
        }
        let [lo, hi] = self.bandpass_hz;
        if !(lo > 0.0 && lo < hi && hi < nyquist) {
            return Err(invalid(format!("bandpass_hz [{lo}, {hi}] must satisfy 0 < low < high < fs/2 = {nyquist}")));
        }
        if let Some(f) = self.notch_hz.iter().find(|&&f| !(f > 0.0 && f < nyquist)) {
            return Err(invalid(format!("notch at {f} Hz is outside (0, fs/2 = {nyquist})")));
        }
        if !(self.epoch_seconds > 0.0 && self.baseline_seconds > 0.0) {
            return Err(invalid("epoch_seconds and baseline_seconds must be positive"));
        }
        if self.n_windows == 0 || self.n_windows * 2 > self.epoch_samples() {
            return Err(invalid(format!(
                "n_windows = {} needs at least 2 samples per window in {}-sample epochs",
                self.n_windows,
                self.epoch_samples()
            )));
        }
        if self.patterns_per_class == 0 || !self.patterns_per_class.is_multiple_of(2) {
            return Err(invalid(format!("patterns_per_class = {} must be even and positive", self.patterns_per_class)));
        }
        if !(self.ica.threshold > 0.0 && self.ica.threshold <= 1.0) {
            return Err(invalid(format!("ica.threshold = {} must be in (0, 1]", self.ica.threshold)));
        }
        let [elo, ehi] = self.erders.range_hz;
        if !(elo > 0.0 && elo < ehi && ehi <= nyquist) {
            return Err(invalid(format!("erders.range_hz [{elo}, {ehi}] must lie within (0, fs/2]")));
        }
        if self.synth.n_classes as u64 > self.vocabulary as u64 {
            return Err(invalid(format!("synth.n_classes = {} exceeds vocabulary {}", self.synth.n_classes, self.vocabulary)));
        }
        if self.synth.gap_seconds < self.baseline_seconds {
            return Err(invalid("synth.gap_seconds must cover the baseline window"));
        }
        if !(self.tsne.perplexity > 0.0) {
            return Err(invalid("tsne.perplexity must be positive"));
        }
        Ok(())
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let s = &self.synth;
        SynthSpec {
            n_channels: s.n_channels,
            n_classes: s.n_classes,
            trials_per_class: s.trials_per_class,
            epoch_seconds: self.epoch_seconds,
            fs_hz: self.fs_hz,
            planted_directions: None,
            boost: vec![s.boost; s.n_classes],
            noise_model: NoiseModel { alpha: s.alpha, sigma: s.sigma },
            domain_shift: DomainShift { epsilon: s.epsilon, noise_sigma: s.noise_sigma },
            seed: self.seed,
            allow_unit_boost: false,
        }
    }

    pub fn ica_options(&self) -> IcaOptions {
        IcaOptions {
            n_components: self.ica.n_components,
            seed: self.seed,
            max_iter: self.ica.max_iter,
            tolerance: self.ica.tolerance,
            stride: self.ica.stride,
        }
    }

    pub fn tsne_params(&self) -> TsneParams {
        TsneParams {
            perplexity: self.tsne.perplexity,
            iterations: self.tsne.iterations,
            learning_rate: self.tsne.learning_rate,
            early_exaggeration: self.tsne.early_exaggeration,
            exaggeration_iterations: self.tsne.exaggeration_iterations,
            seed: self.seed,
            ..TsneParams::default()
        }
    }

    pub fn gate_params(&self) -> GateParams {
        let a = &self.audio;
        GateParams { n_fft: a.n_fft, hop: a.hop, n_std: a.n_std, sigmoid_width: a.sigmoid_width, smoothing: (a.smoothing[0], a.smoothing[1]) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_partial_files_layer() {
        PipelineConfig::default().validate().unwrap();
        let c: PipelineConfig = serde_json::from_str(r#"{"n_windows": 8, "tsne": {"perplexity": 5}}"#).unwrap();
        assert_eq!(c.n_windows, 8);
        assert_eq!(c.tsne.perplexity, 5.0);
        assert_eq!(c.tsne.iterations, 1000);
        assert_eq!(c.patterns_per_class, 8);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"n_window": 8}"#).is_err());
    }

    #[test]
    fn cross_field_checks() {
        let bad = |f: fn(&mut PipelineConfig)| {
            let mut c = PipelineConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.bandpass_hz = [30.0, 600.0]));
        assert!(bad(|c| c.fs_hz = 200.0));
        assert!(bad(|c| c.n_windows = 1001));
        assert!(bad(|c| c.patterns_per_class = 3));
        assert!(bad(|c| c.notch_hz = vec![500.0]));
        assert!(bad(|c| c.synth.n_classes = 14));
        assert!(!bad(|c| c.n_windows = 1000));
    }
}
