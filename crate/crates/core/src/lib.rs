//! EEG valence/arousal classification pipeline.
//!
//! Decomposes multichannel EEG into physiological frequency bands with a
//! db4 discrete wavelet transform, extracts per-window wavelet entropy and
//! energy features, decorrelates them with a full-rank PCA transform, and
//! classifies high/low valence and arousal with an RBF-kernel SVM, a KNN
//! voter, or a small feedforward network, all under eight-fold
//! participant-grouped cross-validation.
//!
//! ```text
//! Recording ─ remove_mean ─ normalize ─ window ─ DWT ─ entropy/energy
//!     ─ PCA (train-fold basis) ─ SVM / KNN / ANN ─ fold metrics ─ report
//! ```
//!
//! The `affect` binary drives the same stages from the command line; see
//! the crate README for the dataset layout and config schema.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod matrix;
pub mod pca;
pub mod preprocess;
pub mod wavelet;

pub use error::{Error, ErrorCategory, Result};
pub use matrix::Matrix;
