//! Cross-city property appraisal.
//!
//! A dense network over city-invariant property features (the *backbone*) is
//! trained on a data-rich source city. Its 10-wide output is concatenated
//! with the one-hot location features of a target city and fed to a small
//! *head* network that is fitted per city, so a new city only needs a few
//! listings per residential community.
//!
//! Modules, bottom-up:
//!
//! - [`ingest`]: CSV parsing, cleaning, per-city vocabularies, splits.
//! - [`encode`]: feature layout, normalization, one-hot encoding.
//! - [`neural`]: dense, batch norm, leaky ReLU, dropout, MSE, AMSGrad.
//! - [`model`]: the two-part network, the single-stack baseline, transfer,
//!   checkpoints.
//! - [`protocol`]: training loop, metrics, cross-validation, transfer runs.
//! - [`synth`]: synthetic multi-city markets with known ground truth.
//! - [`cli`]: the `appraisal` command-line front end.

pub mod cli;
pub mod encode;
pub mod ingest;
pub mod model;
pub mod neural;
pub mod protocol;
pub mod synth;

/// Deterministic RNG used throughout the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;
