//! Feature front-ends: compressed spectrogram, cepstrogram, time-axis DCT
//! grid, and LFCC.
//!
//! All four share the STFT from [`crate::dsp`] and differ only in what they
//! do with per-frame magnitudes:
//!
//! - `spec`: `log1p` compression, nothing else;
//! - `ceps`: `log1p` then an orthonormal DCT-II across frequency, turning
//!   echo ripples into localized quefrency peaks;
//! - `dct`: `log1p` then an orthonormal DCT-II along *time* per frequency
//!   bin, truncated to a fixed coefficient count;
//! - `lfcc`: triangular linear filterbank on the power spectrum, log,
//!   DCT-II, plus delta and delta-delta columns.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::audio::Waveform;
use crate::dsp::{
    compress_log1p, frame_signal, AxisKind, DctPlan, FrameConfig, SpectroMatrix,
};
use crate::error::{Error, Result};

/// Floor applied before any plain logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Magnitude compression applied before the cepstral DCT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compression {
    /// `ln(1 + x)`: zero maps to zero, no floor needed.
    #[default]
    Log1p,
    /// `ln(max(x, 1e-10))`: the classical log magnitude.
    Log,
}

impl Compression {
    fn apply(self, mags: &Array2<f64>) -> Result<Array2<f64>> {
        match self {
            Compression::Log1p => compress_log1p(mags),
            Compression::Log => Ok(mags.mapv(|v| v.max(LOG_FLOOR).ln())),
        }
    }
}

impl std::str::FromStr for Compression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log1p" => Ok(Compression::Log1p),
            "log" => Ok(Compression::Log),
            other => Err(Error::Config(format!("unknown compression '{other}'"))),
        }
    }
}

/// Front-end selector, mirroring the CLI names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontendKind {
    Spec,
    Ceps,
    Dct,
    Lfcc,
    Cqt,
}

impl FrontendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontendKind::Spec => "spec",
            FrontendKind::Ceps => "ceps",
            FrontendKind::Dct => "dct",
            FrontendKind::Lfcc => "lfcc",
            FrontendKind::Cqt => "cqt",
        }
    }
}

impl std::str::FromStr for FrontendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spec" => Ok(FrontendKind::Spec),
            "ceps" => Ok(FrontendKind::Ceps),
            "dct" => Ok(FrontendKind::Dct),
            "lfcc" => Ok(FrontendKind::Lfcc),
            "cqt" => Ok(FrontendKind::Cqt),
            other => Err(Error::Config(format!("unknown front-end '{other}'"))),
        }
    }
}

/// One-sided STFT magnitudes, frames by bins. The FFT is planned once and
/// reused across frames.
fn stft_magnitudes(wave: &Waveform, cfg: &FrameConfig) -> Result<Array2<f64>> {
    let frames = frame_signal(&wave.samples, cfg)?;
    let n_bins = cfg.fft_len / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_len);
    let mut out = Array2::zeros((frames.nrows(), n_bins));
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_len];
    for (f, row) in frames.rows().into_iter().enumerate() {
        buf.fill(Complex::new(0.0, 0.0));
        for (b, &x) in buf.iter_mut().zip(row.iter()) {
            b.re = x;
        }
        fft.process(&mut buf);
        for b in 0..n_bins {
            out[[f, b]] = buf[b].norm();
        }
    }
    Ok(out)
}

/// Quefrency step in seconds for a cepstrogram's coefficient index: a
/// spectral ripple of lag `tau` samples lands at index
/// `2 * (fft_len/2 + 1) * tau / fft_len`, so one index step corresponds to
/// `fft_len / (2 * (fft_len/2 + 1) * fs)` seconds.
pub fn quefrency_step_s(fft_len: usize, sample_rate_hz: u32) -> f64 {
    let n_bins = (fft_len / 2 + 1) as f64;
    fft_len as f64 / (2.0 * n_bins * sample_rate_hz as f64)
}

/// Log1p-compressed magnitude spectrogram (the `spec` front-end).
pub fn spectrogram(wave: &Waveform, cfg: &FrameConfig) -> Result<SpectroMatrix> {
    let mags = stft_magnitudes(wave, cfg)?;
    let data = compress_log1p(&mags)?;
    SpectroMatrix::new(
        data,
        AxisKind::FrequencyHz,
        wave.sample_rate_hz as f64 / cfg.fft_len as f64,
        wave.sample_rate_hz as f64 / cfg.hop_len as f64,
    )
}

/// Cepstrogram with the default `log1p` compression.
pub fn cepstrogram(wave: &Waveform, cfg: &FrameConfig) -> Result<SpectroMatrix> {
    cepstrogram_compressed(wave, cfg, Compression::default())
}

/// Cepstrogram: per frame, an orthonormal DCT-II of the compressed
/// one-sided magnitude spectrum. Rows are frames, columns quefrency
/// indices; `bin_spacing` is the quefrency step in seconds.
pub fn cepstrogram_compressed(
    wave: &Waveform,
    cfg: &FrameConfig,
    compression: Compression,
) -> Result<SpectroMatrix> {
    let mags = stft_magnitudes(wave, cfg)?;
    let logm = compression.apply(&mags)?;
    let n_bins = logm.ncols();
    let plan = DctPlan::new(n_bins)?;
    let mut data = Array2::zeros((logm.nrows(), n_bins));
    let mut row_buf = vec![0.0; n_bins];
    for (f, row) in logm.rows().into_iter().enumerate() {
        row_buf.copy_from_slice(row.as_slice().expect("rows are contiguous"));
        let ceps = plan.apply(&row_buf)?;
        for (b, &v) in ceps.iter().enumerate() {
            data[[f, b]] = v;
        }
    }
    SpectroMatrix::new(
        data,
        AxisKind::QuefrencyS,
        quefrency_step_s(cfg.fft_len, wave.sample_rate_hz),
        wave.sample_rate_hz as f64 / cfg.hop_len as f64,
    )
}

/// Time-axis DCT grid (the `dct` front-end): log1p spectrogram, then per
/// frequency bin an orthonormal DCT-II along time. The time axis is first
/// zero-padded to `max(n_frames, out_len)`; the first `out_len`
/// coefficients are kept, so the output is always `out_len` by `n_bins`.
pub fn dctgram(wave: &Waveform, cfg: &FrameConfig, out_len: usize) -> Result<SpectroMatrix> {
    if out_len == 0 {
        return Err(Error::Config("dct out_len must be >= 1".into()));
    }
    let mags = stft_magnitudes(wave, cfg)?;
    let logm = compress_log1p(&mags)?;
    let n_frames = logm.nrows();
    let n_bins = logm.ncols();
    let padded = n_frames.max(out_len);
    let plan = DctPlan::new(padded)?;
    let mut data = Array2::zeros((out_len, n_bins));
    let mut col = vec![0.0; padded];
    for b in 0..n_bins {
        col.fill(0.0);
        for f in 0..n_frames {
            col[f] = logm[[f, b]];
        }
        let coeffs = plan.apply(&col)?;
        for k in 0..out_len {
            data[[k, b]] = coeffs[k];
        }
    }
    SpectroMatrix::new(
        data,
        AxisKind::CepstralIndex,
        wave.sample_rate_hz as f64 / cfg.fft_len as f64,
        wave.sample_rate_hz as f64 / cfg.hop_len as f64,
    )
}

/// LFCC shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LfccConfig {
    pub n_filters: usize,
    pub n_coeffs: usize,
    /// Append delta and delta-delta columns (tripling the width).
    pub deltas: bool,
}

impl Default for LfccConfig {
    fn default() -> Self {
        LfccConfig {
            n_filters: 20,
            n_coeffs: 20,
            deltas: true,
        }
    }
}

/// Triangular filters with linearly spaced peaks spanning (0, Nyquist),
/// sampled at the one-sided FFT bin frequencies. Each triangle's analytic
/// peak is 1; filter `m` rises from peak `m-1` (0 Hz for the first) to its
/// own peak and falls to peak `m+1` (Nyquist for the last).
pub fn linear_filterbank(
    n_filters: usize,
    fft_len: usize,
    sample_rate_hz: u32,
) -> Result<Vec<Vec<f64>>> {
    if n_filters == 0 {
        return Err(Error::Config("filterbank needs at least one filter".into()));
    }
    if !fft_len.is_power_of_two() {
        return Err(Error::Config(format!(
            "fft_len {fft_len} is not a power of two"
        )));
    }
    let fs = sample_rate_hz as f64;
    let nyquist = fs / 2.0;
    let peak_step = nyquist / (n_filters + 1) as f64;
    let n_bins = fft_len / 2 + 1;
    let mut bank = Vec::with_capacity(n_filters);
    for m in 0..n_filters {
        let left = m as f64 * peak_step;
        let peak = (m + 1) as f64 * peak_step;
        let right = (m + 2) as f64 * peak_step;
        let mut filt = vec![0.0; n_bins];
        for (b, w) in filt.iter_mut().enumerate() {
            let f = b as f64 * fs / fft_len as f64;
            if f > left && f < peak {
                *w = (f - left) / (peak - left);
            } else if (f - peak).abs() < f64::EPSILON * nyquist {
                *w = 1.0;
            } else if f > peak && f < right {
                *w = (right - f) / (right - peak);
            }
        }
        bank.push(filt);
    }
    Ok(bank)
}

/// Delta features over a two-frame regression window with clamped edges:
/// `d[t] = sum_k k * (c[t+k] - c[t-k]) / 10` for `k` in 1..=2. A constant
/// column yields exact zeros.
pub fn compute_deltas(features: &Array2<f64>) -> Array2<f64> {
    let (n_frames, n_cols) = features.dim();
    let clamp = |t: isize| -> usize { t.clamp(0, n_frames as isize - 1) as usize };
    let mut out = Array2::zeros((n_frames, n_cols));
    for t in 0..n_frames {
        for c in 0..n_cols {
            let mut acc = 0.0;
            for k in 1..=2isize {
                let fwd = features[[clamp(t as isize + k), c]];
                let bwd = features[[clamp(t as isize - k), c]];
                acc += k as f64 * (fwd - bwd);
            }
            out[[t, c]] = acc / 10.0;
        }
    }
    out
}

/// LFCC front-end: triangular-filterbank log energies of the power
/// spectrum, DCT-II, first `n_coeffs` coefficients, then optional deltas.
/// With defaults (20 filters, 20 coefficients, deltas on) each frame has 60
/// columns.
pub fn lfcc(wave: &Waveform, cfg: &FrameConfig, lfcc_cfg: &LfccConfig) -> Result<SpectroMatrix> {
    if lfcc_cfg.n_coeffs == 0 || lfcc_cfg.n_coeffs > lfcc_cfg.n_filters {
        return Err(Error::Config(format!(
            "n_coeffs {} must lie in [1, n_filters = {}]",
            lfcc_cfg.n_coeffs, lfcc_cfg.n_filters
        )));
    }
    let mags = stft_magnitudes(wave, cfg)?;
    let bank = linear_filterbank(lfcc_cfg.n_filters, cfg.fft_len, wave.sample_rate_hz)?;
    let plan = DctPlan::new(lfcc_cfg.n_filters)?;
    let n_frames = mags.nrows();
    let mut statics = Array2::zeros((n_frames, lfcc_cfg.n_coeffs));
    let mut energies = vec![0.0; lfcc_cfg.n_filters];
    for f in 0..n_frames {
        for (m, filt) in bank.iter().enumerate() {
            let mut e = 0.0;
            for (b, w) in filt.iter().enumerate() {
                if *w != 0.0 {
                    let mag = mags[[f, b]];
                    e += w * mag * mag;
                }
            }
            energies[m] = e.max(LOG_FLOOR).ln();
        }
        let coeffs = plan.apply(&energies)?;
        for c in 0..lfcc_cfg.n_coeffs {
            statics[[f, c]] = coeffs[c];
        }
    }
    let data = if lfcc_cfg.deltas {
        let d = compute_deltas(&statics);
        let dd = compute_deltas(&d);
        let mut joined = Array2::zeros((n_frames, 3 * lfcc_cfg.n_coeffs));
        for f in 0..n_frames {
            for c in 0..lfcc_cfg.n_coeffs {
                joined[[f, c]] = statics[[f, c]];
                joined[[f, lfcc_cfg.n_coeffs + c]] = d[[f, c]];
                joined[[f, 2 * lfcc_cfg.n_coeffs + c]] = dd[[f, c]];
            }
        }
        joined
    } else {
        statics
    };
    SpectroMatrix::new(
        data,
        AxisKind::FilterIndex,
        1.0,
        wave.sample_rate_hz as f64 / cfg.hop_len as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{magnitude_spectrum, Window};
    use crate::echo::{apply_echo, EchoMode, EchoSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_cfg(frame: usize, hop: usize, fft: usize, window: Window) -> FrameConfig {
        FrameConfig {
            frame_len: frame,
            hop_len: hop,
            fft_len: fft,
            window,
        }
    }

    fn noise_wave(seed: u64, n: usize, fs: u32) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..n).map(|_| rng.random_range(-0.4..0.4)).collect(), fs).unwrap()
    }

    #[test]
    fn spectrogram_matches_direct_pipeline() {
        let wave = noise_wave(1, 2000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let spec = spectrogram(&wave, &cfg).unwrap();
        assert_eq!(spec.n_frames(), cfg.frame_count(2000));
        assert_eq!(spec.n_bins(), 257);
        assert_eq!(spec.axis, AxisKind::FrequencyHz);
        assert!((spec.bin_spacing - 16000.0 / 512.0).abs() < 1e-12);
        assert!((spec.frame_rate_hz - 100.0).abs() < 1e-12);

        // First frame by hand: window, FFT, log1p.
        let win = Window::Hann.sample(400);
        let frame: Vec<f64> = wave.samples[..400]
            .iter()
            .zip(&win)
            .map(|(x, w)| x * w)
            .collect();
        let mags = magnitude_spectrum(&frame, 512).unwrap();
        for (b, m) in mags.iter().enumerate() {
            assert!((spec.data[[0, b]] - m.ln_1p()).abs() < 1e-12);
        }
    }

    #[test]
    fn near_silence_compresses_to_near_zero() {
        let wave = Waveform::new(vec![1e-9; 1000], 16000).unwrap();
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let spec = spectrogram(&wave, &cfg).unwrap();
        assert!(spec.data.iter().all(|&v| v >= 0.0 && v < 1e-6));
    }

    #[test]
    fn cepstrogram_is_bitwise_deterministic() {
        let wave = noise_wave(2, 4000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let a = cepstrogram(&wave, &cfg).unwrap();
        let b = cepstrogram(&wave, &cfg).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.axis, AxisKind::QuefrencyS);
    }

    #[test]
    fn quefrency_step_matches_lag_calibration() {
        // An echo lag of tau samples lands at coefficient index
        // 2 * n_bins * tau / fft_len; converting that index back through
        // the step must recover tau / fs.
        let step = quefrency_step_s(2048, 16000);
        let index = 2.0 * 1025.0 * 200.0 / 2048.0;
        assert!((index * step - 200.0 / 16000.0).abs() < 1e-15);
    }

    #[test]
    fn cepstrogram_peaks_at_echo_lag() {
        let fs = 16000;
        let tau = 200usize;
        let cfg = test_cfg(1600, 800, 2048, Window::Hann);
        for seed in 0..5u64 {
            let base = noise_wave(seed, 16000, fs);
            let echoed = apply_echo(
                &base.samples,
                EchoSpec::new(0.8, tau).unwrap(),
                EchoMode::Linear,
            )
            .unwrap();
            let wave = Waveform::new(echoed, fs).unwrap();
            let ceps = cepstrogram(&wave, &cfg).unwrap();
            let avg = crate::echo::average_frames(&ceps);
            let (argmax, _) = avg
                .iter()
                .enumerate()
                .skip(50)
                .fold((0, f64::MIN), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
            let expect = (2.0 * 1025.0 * tau as f64 / 2048.0).round() as usize;
            assert!(
                argmax.abs_diff(expect) <= 2,
                "seed {seed}: argmax {argmax}, expected ~{expect}"
            );
        }
    }

    #[test]
    fn cepstral_argmax_ignores_input_scale() {
        let fs = 16000;
        let cfg = test_cfg(1600, 800, 2048, Window::Hann);
        let base = noise_wave(9, 16000, fs);
        let echoed = apply_echo(
            &base.samples,
            EchoSpec::new(0.6, 150).unwrap(),
            EchoMode::Linear,
        )
        .unwrap();
        let argmax_of = |scale: f64| -> usize {
            let scaled: Vec<f64> = echoed.iter().map(|x| x * scale).collect();
            let ceps = cepstrogram(&Waveform::new(scaled, fs).unwrap(), &cfg).unwrap();
            let avg = crate::echo::average_frames(&ceps);
            avg.iter()
                .enumerate()
                .skip(6)
                .fold((0, f64::MIN), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                })
                .0
        };
        let reference = argmax_of(1.0);
        assert_eq!(argmax_of(0.5), reference);
        assert_eq!(argmax_of(2.0), reference);
    }

    #[test]
    fn log_compression_path_is_finite_everywhere() {
        let wave = Waveform::new(vec![0.0; 1000], 16000).unwrap();
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let ceps = cepstrogram_compressed(&wave, &cfg, Compression::Log).unwrap();
        assert!(ceps.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dctgram_has_fixed_shape() {
        let wave = noise_wave(3, 5000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let n_frames = cfg.frame_count(5000);
        for out_len in [4, n_frames, n_frames + 9] {
            let g = dctgram(&wave, &cfg, out_len).unwrap();
            assert_eq!(g.n_frames(), out_len);
            assert_eq!(g.n_bins(), 257);
            assert_eq!(g.axis, AxisKind::CepstralIndex);
        }
    }

    #[test]
    fn dctgram_full_length_preserves_column_norms() {
        let wave = noise_wave(4, 4000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let spec = spectrogram(&wave, &cfg).unwrap();
        let n_frames = spec.n_frames();
        for out_len in [n_frames, n_frames + 7] {
            let g = dctgram(&wave, &cfg, out_len).unwrap();
            for b in 0..spec.n_bins() {
                let a: f64 = spec.data.column(b).iter().map(|v| v * v).sum::<f64>().sqrt();
                let c: f64 = g.data.column(b).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(
                    (a - c).abs() <= 1e-9 * a.max(1.0),
                    "out_len {out_len}, bin {b}: {a} vs {c}"
                );
            }
        }
    }

    #[test]
    fn dctgram_of_stationary_signal_is_dc_dominated() {
        // 100 Hz at fs 16k with hop 160: every frame starts in phase, so
        // the spectrogram is constant along time.
        let fs = 16000u32;
        let samples: Vec<f64> = (0..4000)
            .map(|i| (std::f64::consts::TAU * 100.0 * i as f64 / fs as f64).sin() * 0.5)
            .collect();
        let wave = Waveform::new(samples, fs).unwrap();
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let n_frames = cfg.frame_count(4000);
        let g = dctgram(&wave, &cfg, n_frames.min(12)).unwrap();
        let dc: f64 = g.data.row(0).iter().map(|v| v * v).sum::<f64>().sqrt();
        let rest: f64 = (1..g.n_frames())
            .map(|k| g.data.row(k).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        assert!(rest < 1e-6 * dc, "dc {dc}, rest {rest}");
    }

    #[test]
    fn dctgram_rejects_zero_out_len() {
        let wave = noise_wave(5, 1000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        assert!(matches!(dctgram(&wave, &cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn filterbank_outputs_scale_with_flat_power() {
        let bank = linear_filterbank(20, 512, 16000).unwrap();
        assert_eq!(bank.len(), 20);
        let p = 2.0;
        for (m, filt) in bank.iter().enumerate() {
            let area: f64 = filt.iter().sum();
            assert!(area > 0.0, "filter {m} is empty");
            let out: f64 = filt.iter().map(|w| w * p).sum();
            assert!((out - p * area).abs() < 1e-12);
            assert!(filt.iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn filterbank_peaks_are_linearly_spaced() {
        let bank = linear_filterbank(20, 4096, 16000).unwrap();
        // With a dense grid the sampled max approaches the analytic peak of
        // 1 at (m+1) * nyquist / 21.
        for (m, filt) in bank.iter().enumerate() {
            let (argmax, max) = filt
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
            let peak_hz = (m + 1) as f64 * 8000.0 / 21.0;
            let argmax_hz = argmax as f64 * 16000.0 / 4096.0;
            assert!((argmax_hz - peak_hz).abs() < 16000.0 / 4096.0);
            assert!(max > 0.99, "filter {m} max {max}");
        }
    }

    #[test]
    fn lfcc_default_width_is_sixty() {
        let wave = noise_wave(6, 3000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let feats = lfcc(&wave, &cfg, &LfccConfig::default()).unwrap();
        assert_eq!(feats.n_bins(), 60);
        assert_eq!(feats.n_frames(), cfg.frame_count(3000));
        assert_eq!(feats.axis, AxisKind::FilterIndex);
        let no_deltas = lfcc(
            &wave,
            &cfg,
            &LfccConfig {
                deltas: false,
                ..LfccConfig::default()
            },
        )
        .unwrap();
        assert_eq!(no_deltas.n_bins(), 20);
    }

    #[test]
    fn lfcc_deltas_vanish_on_stationary_signal() {
        // Tile one hop-length pattern so every frame is bitwise identical;
        // only then are the regression deltas exactly zero.
        let fs = 16000u32;
        let pattern: Vec<f64> = (0..160)
            .map(|i| (std::f64::consts::TAU * 200.0 * i as f64 / fs as f64).sin() * 0.5)
            .collect();
        let samples: Vec<f64> = (0..4000).map(|i| pattern[i % 160]).collect();
        let wave = Waveform::new(samples, fs).unwrap();
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let feats = lfcc(&wave, &cfg, &LfccConfig::default()).unwrap();
        for f in 0..feats.n_frames() {
            for c in 20..60 {
                assert_eq!(feats.data[[f, c]], 0.0, "frame {f} col {c}");
            }
        }
    }

    #[test]
    fn lfcc_coeff_count_validated() {
        let wave = noise_wave(7, 1000, 16000);
        let cfg = test_cfg(400, 160, 512, Window::Hann);
        let bad = LfccConfig {
            n_filters: 10,
            n_coeffs: 11,
            deltas: false,
        };
        assert!(matches!(lfcc(&wave, &cfg, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn deltas_of_linear_ramp_are_constant_inside() {
        let m = Array2::from_shape_fn((9, 1), |(t, _)| t as f64);
        let d = compute_deltas(&m);
        // Interior: sum k*(c[t+k]-c[t-k]) = 1*2 + 2*4 = 10, over 10 -> 1.
        for t in 2..7 {
            assert!((d[[t, 0]] - 1.0).abs() < 1e-12);
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn frontend_shapes_follow_frame_count(
                n in 500usize..4000,
                seed in 0u64..50
            ) {
                let wave = noise_wave(seed, n, 16000);
                let cfg = test_cfg(400, 160, 512, Window::Hann);
                let expect = cfg.frame_count(n);
                prop_assert_eq!(spectrogram(&wave, &cfg).unwrap().n_frames(), expect);
                prop_assert_eq!(cepstrogram(&wave, &cfg).unwrap().n_frames(), expect);
                prop_assert_eq!(
                    lfcc(&wave, &cfg, &LfccConfig::default()).unwrap().n_frames(),
                    expect
                );
            }
        }
    }
}
