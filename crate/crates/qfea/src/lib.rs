//! Batch anti-spoofing toolkit built around quefrency-domain analysis.
//!
//! The crate splits into small, composable layers:
//!
//! - [`audio`]: WAV and protocol-file I/O, core waveform/trial types.
//! - [`fsio`]: file I/O that reports the offending path on error.
//! - [`dsp`]: framing, windows, FFT magnitudes, orthonormal DCT-II.
//! - [`frontend`]: spectrogram, cepstrogram, time-axis DCT grid, LFCC.
//! - [`cqt`]: constant-Q transform with direct time-domain kernels.
//! - [`featfile`]: binary feature-grid container.
//! - [`echo`]: echo application, ripple models, rahmonic peak detection,
//!   synthetic replay-corpus generation.
//! - [`gmm`]: diagonal-covariance Gaussian mixtures with EM training and
//!   log-likelihood-ratio scoring.
//! - [`metrics`]: EER, detection cost, score normalization and fusion.

pub mod audio;
pub mod cqt;
pub mod dsp;
pub mod echo;
pub mod error;
pub mod featfile;
pub mod frontend;
pub mod fsio;
pub mod gmm;
pub mod metrics;

pub use error::{Error, Result};
