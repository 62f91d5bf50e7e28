//! Time-windowed log-variance embeddings of spatially filtered epochs.
//!
//! Each epoch becomes an `n_windows × n_filters` matrix whose entry `[t, j]`
//! is `ln(max(var(window t of filter j), eps))`, population variance over
//! contiguous non-overlapping windows. Masked copies for display are a
//! separate type so they cannot reach the t-SNE or adaptation metrics.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::signal::{Domain, EpochSet};

pub const DEFAULT_WINDOWS: usize = 16;
/// Variance floor in µV².
pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub n_windows: usize,
    pub n_filters: usize,
    /// Row-major, window-major.
    pub values: Vec<f64>,
    pub epoch_id: u32,
    pub label: u32,
    pub domain: Domain,
}

impl EmbeddingMatrix {
    pub fn get(&self, window: usize, filter: usize) -> f64 {
        self.values[window * self.n_filters + filter]
    }

    pub fn column(&self, filter: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_windows).map(move |t| self.get(t, filter))
    }
}

/// Window length for `n_samples` split into `n_windows`; trailing remainder dropped.
pub fn window_length(n_samples: usize, n_windows: usize) -> Result<usize> {
    if n_windows == 0 {
        return Err(Error::InvalidWindow("n_windows must be positive".into()));
    }
    let len = n_samples / n_windows;
    if len < 2 {
        return Err(Error::InvalidWindow(format!(
            "{n_samples} samples into {n_windows} windows leaves {len} samples per window"
        )));
    }
    Ok(len)
}

fn log_variance(window: &[f64], eps: f64) -> f64 {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.max(eps).ln()
}

/// Embeds one projected epoch (`n_filters × n_samples`, channel-major).
pub fn embed_epoch(
    projected: &[f64],
    n_filters: usize,
    n_samples: usize,
    n_windows: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", format!("{eps} must be positive")));
    }
    if projected.len() != n_filters * n_samples {
        return Err(Error::Shape(format!("{} values for {n_filters}x{n_samples}", projected.len())));
    }
    let len = window_length(n_samples, n_windows)?;
    let mut values = alloc::vec![0.0; n_windows * n_filters];
    for j in 0..n_filters {
        let channel = &projected[j * n_samples..(j + 1) * n_samples];
        for t in 0..n_windows {
            values[t * n_filters + j] = log_variance(&channel[t * len..(t + 1) * len], eps);
        }
    }
    Ok(values)
}

/// One embedding per epoch; `epoch_id` is the epoch's index in `projected`.
pub fn embed(projected: &EpochSet, n_windows: usize, eps: f64) -> Result<Vec<EmbeddingMatrix>> {
    window_length(projected.n_samples(), n_windows)?;
    (0..projected.n_epochs())
        .map(|i| {
            Ok(EmbeddingMatrix {
                n_windows,
                n_filters: projected.n_channels(),
                values: embed_epoch(projected.epoch(i), projected.n_channels(), projected.n_samples(), n_windows, eps)?,
                epoch_id: i as u32,
                label: projected.labels()[i],
                domain: projected.domains()[i],
            })
        })
        .collect()
}

/// Display copy of an embedding with below-column-mean entries hidden.
///
/// The per-column threshold is the mean of the original column and stays
/// attached to the matrix, so masking again is a no-op.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedEmbedding {
    source: EmbeddingMatrix,
    kept: Vec<bool>,
    thresholds: Vec<f64>,
}

/// Hides every entry strictly below its column mean.
pub fn column_mean_mask(m: &EmbeddingMatrix) -> MaskedEmbedding {
    let thresholds: Vec<f64> = (0..m.n_filters).map(|j| m.column(j).sum::<f64>() / m.n_windows as f64).collect();
    let kept = m.values.iter().enumerate().map(|(i, &v)| !(v < thresholds[i % m.n_filters])).collect();
    MaskedEmbedding { source: m.clone(), kept, thresholds }
}

impl MaskedEmbedding {
    pub fn source(&self) -> &EmbeddingMatrix {
        &self.source
    }

    pub fn is_kept(&self, window: usize, filter: usize) -> bool {
        self.kept[window * self.source.n_filters + filter]
    }

    /// Kept value, or `None` when masked.
    pub fn value(&self, window: usize, filter: usize) -> Option<f64> {
        self.is_kept(window, filter).then(|| self.source.get(window, filter))
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Re-applies the stored thresholds to the kept entries.
    pub fn remask(&self) -> MaskedEmbedding {
        let n = self.source.n_filters;
        let kept = self
            .kept
            .iter()
            .enumerate()
            .map(|(i, &k)| k && !(self.source.values[i] < self.thresholds[i % n]))
            .collect();
        MaskedEmbedding { source: self.source.clone(), kept, thresholds: self.thresholds.clone() }
    }

    /// Export values: kept entries shifted by the column minimum (so they are
    /// ≥ 0), masked entries 0.
    pub fn display_values(&self) -> Vec<f64> {
        let n = self.source.n_filters;
        let mins: Vec<f64> = (0..n).map(|j| self.source.column(j).fold(f64::INFINITY, f64::min)).collect();
        self.source
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.kept[i] { v - mins[i % n] } else { 0.0 })
            .collect()
    }
}
