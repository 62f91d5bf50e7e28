//! Diagnostics on epochs and embeddings: ERD/ERS band-power grids, exact
//! t-SNE, and the cross-domain centroid distance.

mod adaptation;
mod erders;
mod tsne;

pub use adaptation::{adaptation_distance, per_class_distances};
pub use erders::{band_tiling, erd_ers, ErdErsGrid, ErdErsParams, Reference, Scope};
pub use tsne::{joint_probabilities, tsne, TsneParams, TsneResult};
