//! `qfea extract`: compute one feature file per protocol trial.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qfea::audio::{parse_protocol, read_wav, Waveform};
use qfea::cqt::{CqtConfig, CqtKernels};
use qfea::dsp::{compress_log1p, AxisKind, SpectroMatrix};
use qfea::featfile::write_feature;
use qfea::frontend::{
    cepstrogram_compressed, dctgram, lfcc, spectrogram, Compression, FrontendKind, LfccConfig,
};
use qfea::{Error, Result};

use crate::commands::build_frame_config;
use crate::manifest::{digest_file, guard_overwrite, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ExtractParams {
    /// Front-end: spec, ceps, dct, lfcc, or cqt.
    #[arg(long)]
    pub frontend: String,

    /// Protocol listing the trials to extract.
    #[arg(long)]
    pub protocol: PathBuf,

    /// Directory holding `<trial_id>.wav`.
    #[arg(long)]
    pub audio_dir: PathBuf,

    /// Directory receiving `<trial_id>.qfea`.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Analysis frame length in milliseconds.
    #[arg(long, default_value_t = 25.0)]
    pub frame_ms: f64,

    /// Hop between frames in milliseconds.
    #[arg(long, default_value_t = 10.0)]
    pub hop_ms: f64,

    /// FFT length (0 = next power of two at or above the frame length).
    #[arg(long, default_value_t = 0)]
    pub fft_len: usize,

    /// Analysis window: hann, hamming, blackman, or rect.
    #[arg(long, default_value = "hann")]
    pub window: String,

    /// Magnitude compression for the ceps front-end: log1p or log.
    #[arg(long, default_value = "log1p")]
    pub compression: String,

    /// Output rows kept by the dct front-end.
    #[arg(long, default_value_t = 40)]
    pub dct_len: usize,

    /// Triangular filters in the lfcc filterbank.
    #[arg(long, default_value_t = 20)]
    pub n_filters: usize,

    /// Cepstral coefficients kept per lfcc frame.
    #[arg(long, default_value_t = 20)]
    pub n_coeffs: usize,

    /// Drop the lfcc delta and delta-delta columns.
    #[arg(long, default_value_t = false)]
    pub no_deltas: bool,

    /// Lowest CQT center frequency in Hz.
    #[arg(long, default_value_t = 55.0)]
    pub f_min: f64,

    /// CQT bins per octave.
    #[arg(long, default_value_t = 24)]
    pub bins_per_octave: usize,

    /// CQT bin count (0 = every bin below Nyquist).
    #[arg(long, default_value_t = 0)]
    pub n_bins: usize,
}

/// CQT kernels are expensive to build; share them across trials with the
/// same sample rate.
struct KernelCache {
    params: (u64, usize, usize, usize),
    cache: Mutex<HashMap<u32, std::sync::Arc<CqtKernels>>>,
}

impl KernelCache {
    fn new(params: &ExtractParams) -> Self {
        KernelCache {
            params: (
                params.f_min.to_bits(),
                params.bins_per_octave,
                params.n_bins,
                0,
            ),
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, params: &ExtractParams, hop_len: usize, fs: u32) -> Result<std::sync::Arc<CqtKernels>> {
        debug_assert_eq!(self.params.0, params.f_min.to_bits());
        let mut cache = self.cache.lock().expect("kernel cache lock");
        if let Some(k) = cache.get(&fs) {
            if k.cfg().hop_len == hop_len {
                return Ok(k.clone());
            }
        }
        let n_bins = if params.n_bins == 0 {
            CqtConfig::bins_below_nyquist(params.f_min, params.bins_per_octave, fs)
        } else {
            params.n_bins
        };
        let cfg = CqtConfig::new(params.f_min, params.bins_per_octave, n_bins, hop_len);
        let kernels = std::sync::Arc::new(CqtKernels::build(&cfg, fs)?);
        cache.insert(fs, kernels.clone());
        Ok(kernels)
    }
}

fn extract_one(
    params: &ExtractParams,
    kind: FrontendKind,
    wave: &Waveform,
    kernels: &KernelCache,
) -> Result<SpectroMatrix> {
    let cfg = build_frame_config(
        params.frame_ms,
        params.hop_ms,
        params.fft_len,
        &params.window,
        wave.sample_rate_hz,
    )?;
    match kind {
        FrontendKind::Spec => spectrogram(wave, &cfg),
        FrontendKind::Ceps => {
            let compression: Compression = params.compression.parse()?;
            cepstrogram_compressed(wave, &cfg, compression)
        }
        FrontendKind::Dct => dctgram(wave, &cfg, params.dct_len),
        FrontendKind::Lfcc => lfcc(
            wave,
            &cfg,
            &LfccConfig {
                n_filters: params.n_filters,
                n_coeffs: params.n_coeffs,
                deltas: !params.no_deltas,
            },
        ),
        FrontendKind::Cqt => {
            let k = kernels.get(params, cfg.hop_len, wave.sample_rate_hz)?;
            let mags = k.transform(&wave.samples)?;
            SpectroMatrix::new(
                compress_log1p(&mags)?,
                AxisKind::CqtBin,
                1.0,
                wave.sample_rate_hz as f64 / cfg.hop_len as f64,
            )
        }
    }
}

pub fn run(params: &ExtractParams, force: bool) -> Result<()> {
    let kind: FrontendKind = params.frontend.parse()?;
    let protocol = parse_protocol(&params.protocol)?;
    std::fs::create_dir_all(&params.out_dir)?;

    let out_paths: Vec<PathBuf> = protocol
        .records
        .iter()
        .map(|r| params.out_dir.join(format!("{}.qfea", r.trial_id)))
        .collect();
    for path in &out_paths {
        guard_overwrite(path, force)?;
    }

    let kernels = KernelCache::new(params);
    let results: Vec<Result<()>> = protocol
        .records
        .par_iter()
        .zip(&out_paths)
        .map(|(rec, out_path)| {
            let wav_path = params.audio_dir.join(format!("{}.wav", rec.trial_id));
            let wave = read_wav(&wav_path)?;
            let grid = extract_one(params, kind, &wave, &kernels)?;
            write_feature(out_path, &grid)
        })
        .collect();

    let mut failures = 0usize;
    for (rec, result) in protocol.records.iter().zip(&results) {
        if let Err(e) = result {
            failures += 1;
            eprintln!("trial {}: {e}", rec.trial_id);
        }
    }
    let total = protocol.records.len();
    println!("extracted {}/{} {} features", total - failures, total, kind.as_str());
    if failures > 0 {
        return Err(Error::Contract(format!(
            "{failures} of {total} trials failed extraction"
        )));
    }

    let mut inputs = vec![digest_file(&params.protocol)?];
    for rec in &protocol.records {
        inputs.push(digest_file(
            &params.audio_dir.join(format!("{}.wav", rec.trial_id)),
        )?);
    }
    let outputs = out_paths
        .iter()
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    let manifest = RunManifest::new("extract", params, inputs, outputs)?;
    write_manifest(&params.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

/// Load one trial's features from an extract output directory.
pub fn feature_path(dir: &Path, trial_id: &str) -> PathBuf {
    dir.join(format!("{trial_id}.qfea"))
}
