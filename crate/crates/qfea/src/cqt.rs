//! Constant-Q transform with direct time-domain kernels.
//!
//! Center frequencies follow `f_k = f_min * 2^(k/B)`; every kernel spans
//! `Q = 1 / (2^(1/B) - 1)` cycles of its own frequency (scaled by
//! `q_scale`), so resolution is constant on a log-frequency axis. Kernels
//! are evaluated directly against the signal at every hop position: at desk
//! scale the naive evaluation is fast enough, trivially correct, and easy
//! to test bin by bin.

use ndarray::Array2;
use rustfft::num_complex::Complex;

use crate::audio::Waveform;
use crate::dsp::{AxisKind, SpectroMatrix, Window};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqtConfig {
    pub f_min_hz: f64,
    pub bins_per_octave: usize,
    pub n_bins: usize,
    pub hop_len: usize,
    /// Multiplier on the canonical kernel length; 1.0 keeps exactly Q
    /// cycles per kernel.
    pub q_scale: f64,
}

impl CqtConfig {
    pub fn new(f_min_hz: f64, bins_per_octave: usize, n_bins: usize, hop_len: usize) -> Self {
        CqtConfig {
            f_min_hz,
            bins_per_octave,
            n_bins,
            hop_len,
            q_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min_hz.is_finite() && self.f_min_hz > 0.0) {
            return Err(Error::Config(format!(
                "f_min {} must be positive",
                self.f_min_hz
            )));
        }
        if self.bins_per_octave == 0 {
            return Err(Error::Config("bins_per_octave must be >= 1".into()));
        }
        if self.n_bins == 0 {
            return Err(Error::Config("n_bins must be >= 1".into()));
        }
        if self.hop_len == 0 {
            return Err(Error::Config("hop_len must be >= 1".into()));
        }
        if !(self.q_scale.is_finite() && self.q_scale > 0.0) {
            return Err(Error::Config(format!(
                "q_scale {} must be positive",
                self.q_scale
            )));
        }
        Ok(())
    }

    /// `Q = 1 / (2^(1/B) - 1)`: cycles per kernel at scale 1.
    pub fn q_factor(&self) -> f64 {
        1.0 / ((1.0 / self.bins_per_octave as f64).exp2() - 1.0)
    }

    /// Geometric ladder `f_min * 2^(k/B)` for k in 0..n_bins.
    pub fn center_frequencies(&self) -> Vec<f64> {
        (0..self.n_bins)
            .map(|k| self.f_min_hz * (k as f64 / self.bins_per_octave as f64).exp2())
            .collect()
    }

    /// Largest bin count whose top frequency stays below Nyquist.
    pub fn bins_below_nyquist(f_min_hz: f64, bins_per_octave: usize, sample_rate_hz: u32) -> usize {
        let nyquist = sample_rate_hz as f64 / 2.0;
        let mut k = 0usize;
        while f_min_hz * (k as f64 / bins_per_octave as f64).exp2() < nyquist {
            k += 1;
        }
        // Bins 0..k-1 all sit below Nyquist, so k of them are usable.
        k.max(1)
    }
}

/// Validated center frequencies for a config.
pub fn cqt_center_frequencies(cfg: &CqtConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(cfg.center_frequencies())
}

/// Kernel table for one (config, sample rate) pair. Built once, read-only
/// afterwards.
pub struct CqtKernels {
    cfg: CqtConfig,
    sample_rate_hz: u32,
    kernels: Vec<Vec<Complex<f64>>>,
}

impl CqtKernels {
    pub fn cfg(&self) -> &CqtConfig {
        &self.cfg
    }

    pub fn build(cfg: &CqtConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate()?;
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let freqs = cfg.center_frequencies();
        let nyquist = sample_rate_hz as f64 / 2.0;
        let f_max = *freqs.last().expect("n_bins >= 1");
        if f_max >= nyquist {
            return Err(Error::Config(format!(
                "top bin at {f_max:.2} Hz reaches Nyquist ({nyquist} Hz); reduce n_bins or f_min"
            )));
        }
        let q = cfg.q_factor() * cfg.q_scale;
        let fs = sample_rate_hz as f64;
        let kernels = freqs
            .iter()
            .map(|&fk| {
                let n_k = (q * fs / fk).ceil() as usize;
                let win = Window::Hann.sample(n_k);
                let win_sum: f64 = win.iter().sum();
                let center = (n_k - 1) as f64 / 2.0;
                win.iter()
                    .enumerate()
                    .map(|(j, &w)| {
                        let phase = -std::f64::consts::TAU * fk * (j as f64 - center) / fs;
                        Complex::from_polar(w / win_sum, phase)
                    })
                    .collect()
            })
            .collect();
        Ok(CqtKernels {
            cfg: *cfg,
            sample_rate_hz,
            kernels,
        })
    }

    pub fn kernel_lengths(&self) -> Vec<usize> {
        self.kernels.iter().map(Vec::len).collect()
    }

    /// Magnitude grid, one row per hop position (`1 + (len-1)/hop` rows),
    /// one column per bin. Kernels are centered on the hop position and
    /// read zeros beyond the signal edges.
    pub fn transform(&self, samples: &[f64]) -> Result<Array2<f64>> {
        if samples.is_empty() {
            return Err(Error::Domain("cannot transform an empty signal".into()));
        }
        let n = samples.len() as isize;
        let n_frames = 1 + (samples.len() - 1) / self.cfg.hop_len;
        let mut out = Array2::zeros((n_frames, self.cfg.n_bins));
        for f in 0..n_frames {
            let pos = (f * self.cfg.hop_len) as isize;
            for (k, kernel) in self.kernels.iter().enumerate() {
                let half = kernel.len() as isize / 2;
                let start = pos - half;
                let mut acc = Complex::new(0.0, 0.0);
                let j_lo = (-start).max(0) as usize;
                let j_hi = (n - start).clamp(0, kernel.len() as isize) as usize;
                for (j, k_val) in kernel.iter().enumerate().take(j_hi).skip(j_lo) {
                    let x = samples[(start + j as isize) as usize];
                    acc += k_val * x;
                }
                out[[f, k]] = acc.norm();
            }
        }
        Ok(out)
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }
}

/// The `cqt` front-end: log1p-compressed constant-Q magnitudes.
pub fn cqtgram(wave: &Waveform, cfg: &CqtConfig) -> Result<SpectroMatrix> {
    let kernels = CqtKernels::build(cfg, wave.sample_rate_hz)?;
    let mags = kernels.transform(&wave.samples)?;
    let data = crate::dsp::compress_log1p(&mags)?;
    SpectroMatrix::new(
        data,
        AxisKind::CqtBin,
        1.0,
        wave.sample_rate_hz as f64 / cfg.hop_len as f64,
    )
}
