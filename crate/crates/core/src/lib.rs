//! Numerical core for building neural speech embeddings from EEG.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm of
//! the pipeline: IIR filtering and segmentation ([`signal`]), FastICA artifact
//! rejection ([`ica`]), multi-class common spatial patterns ([`spatial`]),
//! windowed log-variance embeddings ([`embedding`]), ERD/ERS grids, t-SNE and
//! the domain-adaptation distance ([`analysis`]), voice preprocessing
//! ([`audio`]) and the seeded synthetic data used to validate all of it
//! ([`synth`]). File formats and the command line live in the `nse` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod audio;
pub mod embedding;
pub mod error;
pub mod fft;
pub mod ica;
pub mod linalg;
pub mod signal;
pub mod spatial;
pub mod synth;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
pub use nalgebra;
