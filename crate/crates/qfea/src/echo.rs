//! Echo modelling, rahmonic peak detection, and replay-corpus synthesis.
//!
//! A single reflection turns `s[n]` into `s[n] + alpha * s[n - tau]`,
//! which multiplies the magnitude spectrum by a cosine ripple in frequency.
//! On a log scale that ripple becomes an additive comb whose cepstral image
//! is a peak at quefrency lag `tau` (a rahmonic). This module provides the
//! closed-form ripple, the time-domain echo operators that realize it, a
//! robust peak detector for the averaged cepstrum, and a deterministic
//! generator for bona-fide/spoof corpora built from echo chains.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::audio::{
    write_protocol, write_wav, ClassLabel, Partition, Protocol, TrialRecord, Waveform,
};
use crate::dsp::{AxisKind, SpectroMatrix};
use crate::error::{Error, Result};

/// One reflection: attenuation `alpha` in [0, 1), lag `tau` in samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoSpec {
    pub alpha: f64,
    pub tau_samples: usize,
}

impl EchoSpec {
    pub fn new(alpha: f64, tau_samples: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "echo attenuation {alpha} outside [0, 1)"
            )));
        }
        Ok(EchoSpec { alpha, tau_samples })
    }
}

/// How the delayed copy treats signal edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    /// Output grows by `tau` samples; the delayed copy reads zeros before
    /// the signal starts.
    Linear,
    /// The delay wraps modulo the signal length, which makes the spectral
    /// ripple identity exact bin by bin. Analysis use only.
    Circular,
}

/// Magnitude gain of one echo at normalized `omega_tau = omega * tau`:
/// `sqrt(1 + alpha^2 + 2 alpha cos(omega tau))`.
pub fn ripple_gain(omega_tau: f64, alpha: f64) -> f64 {
    (1.0 + alpha * alpha + 2.0 * alpha * omega_tau.cos()).sqrt()
}

/// Additive log-magnitude component of one echo:
/// `0.5 * ln(1 + alpha^2 + 2 alpha cos(omega tau))`.
pub fn log_ripple(omega_tau: f64, alpha: f64) -> f64 {
    0.5 * (1.0 + alpha * alpha + 2.0 * alpha * omega_tau.cos()).ln()
}

/// Apply one echo tap. Linear mode returns `len + tau` samples; circular
/// mode keeps the length and requires `tau < len`.
pub fn apply_echo(samples: &[f64], spec: EchoSpec, mode: EchoMode) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot echo an empty signal".into()));
    }
    let n = samples.len();
    let tau = spec.tau_samples;
    match mode {
        EchoMode::Linear => {
            let mut out = vec![0.0; n + tau];
            for (i, &x) in samples.iter().enumerate() {
                out[i] += x;
                out[i + tau] += spec.alpha * x;
            }
            Ok(out)
        }
        EchoMode::Circular => {
            if tau >= n {
                return Err(Error::Domain(format!(
                    "circular echo lag {tau} must be shorter than the signal ({n})"
                )));
            }
            Ok((0..n)
                .map(|i| samples[i] + spec.alpha * samples[(i + n - tau) % n])
                .collect())
        }
    }
}

/// A replay-style processing chain: multi-tap echo, optional band-limit,
/// optional additive noise at a target SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayChain {
    taps: Vec<EchoSpec>,
    band_hz: Option<(f64, f64)>,
    noise_snr_db: Option<f64>,
}

impl ReplayChain {
    pub fn new(
        mut taps: Vec<EchoSpec>,
        band_hz: Option<(f64, f64)>,
        noise_snr_db: Option<f64>,
    ) -> Result<Self> {
        if let Some((lo, hi)) = band_hz {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(Error::Config(format!(
                    "band edges ({lo}, {hi}) must satisfy 0 < low < high"
                )));
            }
        }
        if let Some(snr) = noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::Config("noise SNR must be finite".into()));
            }
        }
        taps.sort_by_key(|t| t.tau_samples);
        Ok(ReplayChain {
            taps,
            band_hz,
            noise_snr_db,
        })
    }

    /// Single mild reflection at 6 ms, no band-limiting: the room every
    /// recording passes through.
    pub fn default_bonafide(sample_rate_hz: u32) -> Self {
        let tau = ms_to_samples(6.0, sample_rate_hz);
        ReplayChain::new(vec![EchoSpec::new(0.4, tau).unwrap()], None, None).unwrap()
    }

    /// Two extra reflections (3.75 ms and 1.25 ms) plus a 100-7000 Hz
    /// band-limit: the replay device and its playback room.
    pub fn default_spoof(sample_rate_hz: u32) -> Self {
        let taps = vec![
            EchoSpec::new(0.5, ms_to_samples(3.75, sample_rate_hz)).unwrap(),
            EchoSpec::new(0.3, ms_to_samples(1.25, sample_rate_hz)).unwrap(),
        ];
        ReplayChain::new(taps, Some((100.0, 7000.0)), None).unwrap()
    }

    pub fn taps(&self) -> &[EchoSpec] {
        &self.taps
    }

    pub fn band_hz(&self) -> Option<(f64, f64)> {
        self.band_hz
    }

    pub fn noise_snr_db(&self) -> Option<f64> {
        self.noise_snr_db
    }
}

pub fn ms_to_samples(ms: f64, sample_rate_hz: u32) -> usize {
    (ms * sample_rate_hz as f64 / 1000.0).round() as usize
}

/// First-order high-pass then first-order low-pass; edges are gentle
/// (6 dB/octave), as a cheap playback device would be.
fn band_pass(samples: &[f64], lo_hz: f64, hi_hz: f64, sample_rate_hz: u32) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    let r_hp = (-2.0 * std::f64::consts::PI * lo_hz / fs).exp();
    let a_lp = 1.0 - (-2.0 * std::f64::consts::PI * hi_hz / fs).exp();
    let mut out = Vec::with_capacity(samples.len());
    let mut hp = 0.0;
    let mut prev_x = 0.0;
    let mut lp = 0.0;
    for &x in samples {
        hp = r_hp * (hp + x - prev_x);
        prev_x = x;
        lp += a_lp * (hp - lp);
        out.push(lp);
    }
    out
}

/// Run a signal through a chain: all echo taps applied as one multi-tap
/// filter (linear mode, so the output grows by the longest lag), then the
/// band-limit, then noise at the configured SNR drawn from `rng`.
pub fn apply_chain(
    samples: &[f64],
    chain: &ReplayChain,
    sample_rate_hz: u32,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot process an empty signal".into()));
    }
    let max_tau = chain.taps.iter().map(|t| t.tau_samples).max().unwrap_or(0);
    let mut out = vec![0.0; samples.len() + max_tau];
    for (i, &x) in samples.iter().enumerate() {
        out[i] += x;
    }
    for tap in &chain.taps {
        for (i, &x) in samples.iter().enumerate() {
            out[i + tap.tau_samples] += tap.alpha * x;
        }
    }
    if let Some((lo, hi)) = chain.band_hz {
        let nyquist = sample_rate_hz as f64 / 2.0;
        if hi >= nyquist {
            return Err(Error::Config(format!(
                "band high edge {hi} Hz must stay below Nyquist ({nyquist} Hz)"
            )));
        }
        out = band_pass(&out, lo, hi, sample_rate_hz);
    }
    if let Some(snr_db) = chain.noise_snr_db {
        let rms = (out.iter().map(|x| x * x).sum::<f64>() / out.len() as f64).sqrt();
        let sigma = rms * 10f64.powf(-snr_db / 20.0);
        for x in &mut out {
            let z: f64 = StandardNormal.sample(rng);
            *x += sigma * z;
        }
    }
    Ok(out)
}

/// One detected cepstral peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RahmonicPeak {
    pub index: usize,
    pub quefrency_s: f64,
    pub magnitude: f64,
}

/// Peaks of an averaged cepstrum, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub peaks: Vec<RahmonicPeak>,
}

/// Mean over frames, one value per column.
pub fn average_frames(grid: &SpectroMatrix) -> Vec<f64> {
    let n = grid.n_frames() as f64;
    (0..grid.n_bins())
        .map(|b| grid.data.column(b).sum() / n)
        .collect()
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Find rahmonic peaks in a cepstrogram: average over frames, then keep
/// local maxima in `[min_index, n_bins - 2]` that clear a robust threshold
/// (median + 4 * MAD of that searched range). At most `max_peaks` peaks are
/// returned, strongest first.
pub fn detect_rahmonic_peaks(
    cepstrogram: &SpectroMatrix,
    min_index: usize,
    max_peaks: usize,
) -> Result<PeakReport> {
    if cepstrogram.axis != AxisKind::QuefrencyS {
        return Err(Error::Contract(format!(
            "peak detection expects a quefrency-axis grid, got {:?}",
            cepstrogram.axis
        )));
    }
    if min_index == 0 {
        return Err(Error::Domain(
            "min_index must be >= 1 so every candidate has a left neighbour".into(),
        ));
    }
    let n_bins = cepstrogram.n_bins();
    if min_index + 1 >= n_bins {
        return Err(Error::Domain(format!(
            "search range [{min_index}, {}] is empty",
            n_bins.saturating_sub(2)
        )));
    }
    let avg = average_frames(cepstrogram);
    let searched = &avg[min_index..n_bins - 1];
    let median = median_of(searched.to_vec());
    let mad = median_of(searched.iter().map(|v| (v - median).abs()).collect());
    let threshold = median + 4.0 * mad;

    let mut peaks: Vec<RahmonicPeak> = (min_index..n_bins - 1)
        .filter(|&i| avg[i] > avg[i - 1] && avg[i] > avg[i + 1] && avg[i] > threshold)
        .map(|i| RahmonicPeak {
            index: i,
            quefrency_s: i as f64 * cepstrogram.bin_spacing,
            magnitude: avg[i],
        })
        .collect();
    peaks.sort_by(|a, b| {
        b.magnitude
            .partial_cmp(&a.magnitude)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    peaks.truncate(max_peaks);
    Ok(PeakReport { peaks })
}

/// Everything that determines a synthetic corpus. Two configs with equal
/// fields produce byte-identical corpora.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub n_per_class: usize,
    pub sample_rate_hz: u32,
    pub partition: Partition,
    pub bona_chain: ReplayChain,
    pub spoof_chain: ReplayChain,
}

impl CorpusConfig {
    pub fn new(seed: u64, n_per_class: usize, sample_rate_hz: u32, partition: Partition) -> Self {
        CorpusConfig {
            seed,
            n_per_class,
            sample_rate_hz,
            partition,
            bona_chain: ReplayChain::default_bonafide(sample_rate_hz),
            spoof_chain: ReplayChain::default_spoof(sample_rate_hz),
        }
    }
}

/// Independent RNG stream per trial, keyed by corpus seed, partition,
/// class, and trial index. Generation order therefore cannot influence
/// any trial's content.
fn trial_rng(seed: u64, partition: Partition, label: ClassLabel, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = partition.tag() as u8;
    key[9] = match label {
        ClassLabel::Bonafide => 0,
        ClassLabel::Spoof => 1,
    };
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"qfeasynt");
    ChaCha8Rng::from_seed(key)
}

/// Harmonic-plus-noise pseudo-speech: random F0 in [80, 300] Hz with a
/// downward glide and light vibrato, ten harmonics with 1/h amplitude
/// rolloff and random phases, slow amplitude modulation, plus aspiration
/// noise 20 dB below the harmonic part. Peak level is randomized but
/// capped so later echo chains cannot clip.
///
/// The per-trial randomness is load-bearing. The pitch drift smears the
/// pitch rahmonic across several quefrency bins in the frame-averaged
/// cepstrum, the way natural prosody does, while chain echoes stay at
/// fixed integer lags. The ambient noise gets a random per-trial
/// coloration — random band shape plus a short-lag comb from its own
/// (sub-millisecond) reflection path — because a noise floor that is
/// identically colored in every trial would hand any spectral model the
/// replay chain's fingerprint on a per-bin platter: the chain multiplies
/// the floor by a fixed ripple, and with no floor variability of its own
/// that ratio is learnable from a single frame. Real ambient noise has
/// its own transfer path; modelling that is what keeps the benchmark
/// from collapsing into triviality.
fn synth_base_signal(rng: &mut ChaCha8Rng, sample_rate_hz: u32) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    let duration_s: f64 = rng.random_range(1.0..1.6);
    let n = (duration_s * fs).round() as usize;
    let f0: f64 = rng.random_range(85.0..290.0);
    let glide: f64 = rng.random_range(0.08..0.15);
    let vib_depth: f64 = rng.random_range(0.015..0.03);
    let vib_rate: f64 = rng.random_range(4.0..7.0);
    let vib_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let am_rate: f64 = rng.random_range(2.0..6.0);
    let am_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phases: Vec<f64> = (0..10)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    // Ambient-noise coloration: random band shape (low-pass cutoff
    // log-uniform over 600 Hz – 4 kHz, high-pass cutoff log-uniform over
    // 30 – 250 Hz) and a dense sub-millisecond reflection path (five taps
    // with random lags, gains, and signs) — a compact noise source heard
    // past nearby surfaces. The lags stay below a millisecond so the
    // coloration lives entirely in the lowest quefrency indices, well
    // under any echo lag a replay chain would add; its job is to give
    // every trial's noise floor an unpredictable fine structure. The
    // noise level also drifts slowly (a few dB over the trial), as
    // unattended ambient sound does.
    let noise_lp_hz: f64 =
        600.0 * 10f64.powf(rng.random_range(0.0..1.0) * (4000f64 / 600.0).log10());
    let noise_hp_hz: f64 =
        30.0 * 10f64.powf(rng.random_range(0.0..1.0) * (250f64 / 30.0).log10());
    let max_reflect_lag = ((0.001 * fs) as usize).max(6);
    let noise_path: Vec<(usize, f64)> = (0..5)
        .map(|_| {
            let lag = rng.random_range(2..=max_reflect_lag);
            let gain: f64 = rng.random_range(0.35..0.9)
                * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
            (lag, gain)
        })
        .collect();
    let drift_db: f64 = rng.random_range(2.0..5.0);
    let drift_rate: f64 = rng.random_range(0.2..0.8);
    let drift_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);

    let mut out = vec![0.0; n];
    let mut cycles = 0.0; // integrated instantaneous F0
    for (i, x) in out.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let f_inst = f0
            * (1.0 - glide * t / duration_s)
            * (1.0 + vib_depth * (std::f64::consts::TAU * vib_rate * t + vib_phase).sin());
        cycles += f_inst / fs;
        let mut v = 0.0;
        for (h, &phase) in phases.iter().enumerate() {
            let hf = (h + 1) as f64;
            v += (std::f64::consts::TAU * hf * cycles + phase).sin() / hf;
        }
        let am = 1.0 - 0.45 * (1.0 - (std::f64::consts::TAU * am_rate * t + am_phase).cos());
        *x = v * am;
    }
    let harmonic_rms = (out.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    // Ambient noise: white Gaussian through the trial's coloration chain
    // (one-pole low-pass, one-pole high-pass, two-tap comb), scaled so the
    // total sits 20 dB below the harmonic part.
    let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mut noise = vec![0.0; n];
    let a_lp = 1.0 - (-2.0 * std::f64::consts::PI * noise_lp_hz / fs).exp();
    let r_hp = (-2.0 * std::f64::consts::PI * noise_hp_hz / fs).exp();
    let (mut lp, mut hp, mut prev) = (0.0, 0.0, 0.0);
    for (y, &z) in noise.iter_mut().zip(&white) {
        lp += a_lp * (z - lp);
        hp = r_hp * (hp + lp - prev);
        prev = lp;
        *y = hp;
    }
    for i in (0..n).rev() {
        let mut v = noise[i];
        for &(lag, gain) in &noise_path {
            if i >= lag {
                v += gain * noise[i - lag];
            }
        }
        noise[i] = v;
    }
    for (i, z) in noise.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let db = 0.5 * drift_db * (std::f64::consts::TAU * drift_rate * t + drift_phase).sin();
        *z *= 10f64.powf(db / 20.0);
    }
    let noise_rms = (noise.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    let noise_gain = if noise_rms > 0.0 {
        harmonic_rms * 10f64.powf(-20.0 / 20.0) / noise_rms
    } else {
        0.0
    };
    for (x, z) in out.iter_mut().zip(&noise) {
        *x += noise_gain * z;
    }
    let peak = out.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let target = 0.35 * rng.random_range(0.15..1.0);
    let gain = if peak > 0.0 { target / peak } else { 0.0 };
    for x in &mut out {
        *x *= gain;
    }
    out
}

fn synth_trial(cfg: &CorpusConfig, label: ClassLabel, index: u64) -> Result<Waveform> {
    // A spoof trial is the replayed version of the bona-fide trial with
    // the same index, so both draw the base signal and room chain from the
    // bona-fide stream. The spoof chain consumes its own stream.
    let mut rng = trial_rng(cfg.seed, cfg.partition, ClassLabel::Bonafide, index);
    let base = synth_base_signal(&mut rng, cfg.sample_rate_hz);
    let through_room = apply_chain(&base, &cfg.bona_chain, cfg.sample_rate_hz, &mut rng)?;
    let samples = match label {
        ClassLabel::Bonafide => through_room,
        ClassLabel::Spoof => {
            let mut replay_rng = trial_rng(cfg.seed, cfg.partition, ClassLabel::Spoof, index);
            apply_chain(
                &through_room,
                &cfg.spoof_chain,
                cfg.sample_rate_hz,
                &mut replay_rng,
            )?
        }
    };
    Waveform::new(samples, cfg.sample_rate_hz)
}

/// Generate a corpus: `n_per_class` bona-fide and spoof trials, written as
/// `<trial_id>.wav` under `out_dir` next to a `protocol.txt`. Returns the
/// protocol. Fully determined by the config; trials are generated in
/// parallel.
pub fn synthesize_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<Protocol> {
    if cfg.n_per_class == 0 {
        return Err(Error::Config("n_per_class must be >= 1".into()));
    }
    std::fs::create_dir_all(out_dir)?;

    let jobs: Vec<(ClassLabel, u64)> = [ClassLabel::Bonafide, ClassLabel::Spoof]
        .into_iter()
        .flat_map(|label| (0..cfg.n_per_class as u64).map(move |i| (label, i)))
        .collect();

    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(label, index)| -> Result<TrialRecord> {
            let wave = synth_trial(cfg, label, index)?;
            let trial_id = format!("QC_{}_{:07}", cfg.partition.tag(), trial_index_id(label, index, cfg.n_per_class));
            write_wav(&out_dir.join(format!("{trial_id}.wav")), &wave)?;
            Ok(TrialRecord {
                speaker_id: format!("QS_{:04}", index),
                trial_id,
                environment: "synth".into(),
                attack_id: match label {
                    ClassLabel::Bonafide => "-".into(),
                    ClassLabel::Spoof => "R01".into(),
                },
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let protocol = Protocol::new(records, Some(cfg.partition))?;
    write_protocol(&out_dir.join("protocol.txt"), &protocol)?;
    Ok(protocol)
}

fn trial_index_id(label: ClassLabel, index: u64, n_per_class: usize) -> u64 {
    match label {
        ClassLabel::Bonafide => index,
        ClassLabel::Spoof => n_per_class as u64 + index,
    }
}
