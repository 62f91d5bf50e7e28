//! CSV tables for plotting: ERD/ERS grids and t-SNE coordinates.

use nse_core::analysis::{ErdErsGrid, TsneResult};
use nse_core::embedding::EmbeddingMatrix;

/// Header row of time-bin intervals, then one row per band.
pub fn grid_csv(grid: &ErdErsGrid) -> String {
    let mut out = String::from("band_hz");
    for (a, b) in &grid.time_bins {
        out.push_str(&format!(",{a}-{b}s"));
    }
    out.push('\n');
    for (i, (lo, hi)) in grid.bands.iter().enumerate() {
        out.push_str(&format!("{lo}-{hi}"));
        for j in 0..grid.time_bins.len() {
            out.push_str(&format!(",{}", grid.get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// `epoch_id,label,domain,x,y`, one row per embedded point.
pub fn tsne_csv(points: &[EmbeddingMatrix], result: &TsneResult) -> String {
    let mut out = String::from("epoch_id,label,domain,x,y\n");
    for (m, p) in points.iter().zip(&result.points) {
        out.push_str(&format!("{},{},{},{},{}\n", m.epoch_id, m.label, m.domain.as_str(), p[0], p[1]));
    }
    out
}
