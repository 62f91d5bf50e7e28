//! Synthetic ground truth as JSON.

use std::path::Path;

use nse_core::synth::{GroundTruth, SynthSpec};
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub version: u32,
    pub seed: u64,
    pub n_channels: usize,
    pub n_classes: usize,
    pub trials_per_class: usize,
    pub epoch_seconds: f64,
    pub fs_hz: f64,
    pub boost: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    /// One unit vector per class.
    pub directions: Vec<Vec<f64>>,
    /// Spoken-domain channel mixing, row-major.
    pub mixing: Vec<Vec<f64>>,
}

impl TruthFile {
    pub fn new(spec: &SynthSpec, truth: &GroundTruth) -> Self {
        Self {
            version: 1,
            seed: truth.seed,
            n_channels: spec.n_channels,
            n_classes: spec.n_classes,
            trials_per_class: spec.trials_per_class,
            epoch_seconds: spec.epoch_seconds,
            fs_hz: spec.fs_hz,
            boost: truth.boost.clone(),
            alpha: spec.noise_model.alpha,
            sigma: spec.noise_model.sigma,
            epsilon: spec.domain_shift.epsilon,
            noise_sigma: spec.domain_shift.noise_sigma,
            directions: truth.directions.clone(),
            mixing: truth.mixing.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

pub fn read(path: &Path) -> Result<TruthFile> {
    read_json(path)
}

pub fn write(path: &Path, truth: &TruthFile) -> Result<()> {
    write_json(path, truth)
}
