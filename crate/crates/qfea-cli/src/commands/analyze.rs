//! `qfea analyze`: rahmonic peak report for a single recording, with
//! optional spectrogram/cepstrogram grid dumps for plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qfea::audio::read_wav;
use qfea::echo::detect_rahmonic_peaks;
use qfea::featfile::write_feature;
use qfea::frontend::{cepstrogram, spectrogram};
use qfea::{Error, Result};

use crate::commands::build_frame_config;
use crate::manifest::{digest_file, guard_overwrite, manifest_sibling, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct AnalyzeParams {
    /// Input WAV file.
    #[arg(long)]
    pub input: PathBuf,

    /// Tab-separated peak report path.
    #[arg(long)]
    pub report: PathBuf,

    /// Directory for grid dumps: writes `<stem>.spec.qfea` (frequency axis)
    /// and `<stem>.ceps.qfea` (quefrency axis) for plotting.
    #[arg(long)]
    pub dump_grids: Option<PathBuf>,

    /// Lowest quefrency index searched for peaks.
    #[arg(long, default_value_t = 10)]
    pub min_index: usize,

    /// Maximum number of peaks reported.
    #[arg(long, default_value_t = 8)]
    pub max_peaks: usize,

    /// Frame length in milliseconds.
    #[arg(long, default_value_t = 25.0)]
    pub frame_ms: f64,

    /// Hop length in milliseconds.
    #[arg(long, default_value_t = 10.0)]
    pub hop_ms: f64,

    /// FFT length (0 = next power of two >= frame length).
    #[arg(long, default_value_t = 0)]
    pub fft_len: usize,

    /// Analysis window: hann, hamming, or rect.
    #[arg(long, default_value = "hann")]
    pub window: String,
}

/// `<dir>/<input stem>.<tag>.qfea`.
fn grid_path(dir: &Path, input: &Path, tag: &str) -> Result<PathBuf> {
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| {
            Error::Config(format!(
                "cannot derive a grid file name from input path {}",
                input.display()
            ))
        })?;
    Ok(dir.join(format!("{stem}.{tag}.qfea")))
}

pub fn run(params: &AnalyzeParams, force: bool) -> Result<()> {
    guard_overwrite(&params.report, force)?;
    let grid_paths = match &params.dump_grids {
        Some(dir) => {
            let spec = grid_path(dir, &params.input, "spec")?;
            let ceps = grid_path(dir, &params.input, "ceps")?;
            guard_overwrite(&spec, force)?;
            guard_overwrite(&ceps, force)?;
            Some((spec, ceps))
        }
        None => None,
    };

    let wave = read_wav(&params.input)?;
    let cfg = build_frame_config(
        params.frame_ms,
        params.hop_ms,
        params.fft_len,
        &params.window,
        wave.sample_rate_hz,
    )?;
    let ceps = cepstrogram(&wave, &cfg)?;
    let peaks = detect_rahmonic_peaks(&ceps, params.min_index, params.max_peaks)?;

    let mut report = String::from("index\tquefrency_s\tmagnitude\n");
    for p in &peaks.peaks {
        let _ = writeln!(report, "{}\t{:.6}\t{:.6}", p.index, p.quefrency_s, p.magnitude);
    }
    qfea::fsio::write_bytes(&params.report, &report)?;
    print!("{report}");

    let mut outputs = vec![params.report.to_string_lossy().into_owned()];
    if let Some((spec_path, ceps_path)) = &grid_paths {
        if let Some(dir) = &params.dump_grids {
            std::fs::create_dir_all(dir)?;
        }
        let spec = spectrogram(&wave, &cfg)?;
        write_feature(spec_path, &spec)?;
        write_feature(ceps_path, &ceps)?;
        outputs.push(spec_path.to_string_lossy().into_owned());
        outputs.push(ceps_path.to_string_lossy().into_owned());
    }

    let manifest = RunManifest::new("analyze", params, vec![digest_file(&params.input)?], outputs)?;
    write_manifest(&manifest_sibling(&params.report), &manifest)?;
    Ok(())
}
