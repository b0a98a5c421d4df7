//! Short-time analysis primitives shared by every front-end.
//!
//! The pipeline here is deliberately small: frame a signal, window it,
//! take a one-sided FFT magnitude, optionally compress and transform with
//! an orthonormal DCT-II. Everything downstream (cepstrograms, LFCC,
//! echo analysis) composes these pieces rather than reimplementing them.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Analysis window shape, applied multiplicatively to each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Hamming,
    Blackman,
    Rectangular,
}

impl Window {
    /// Sampled window of length `len` (symmetric definition).
    pub fn sample(self, len: usize) -> Vec<f64> {
        if len <= 1 {
            return vec![1.0; len];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|i| {
                let t = i as f64 / denom;
                match self {
                    Window::Hann => 0.5 - 0.5 * (2.0 * std::f64::consts::PI * t).cos(),
                    Window::Hamming => 0.54 - 0.46 * (2.0 * std::f64::consts::PI * t).cos(),
                    Window::Blackman => {
                        0.42 - 0.5 * (2.0 * std::f64::consts::PI * t).cos()
                            + 0.08 * (4.0 * std::f64::consts::PI * t).cos()
                    }
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "hamming" => Ok(Window::Hamming),
            "blackman" => Ok(Window::Blackman),
            "rect" | "rectangular" => Ok(Window::Rectangular),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }
}

/// Short-time analysis geometry. `fft_len` must be a power of two and at
/// least `frame_len`; the FFT input is the windowed frame zero-padded to
/// `fft_len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub hop_len: usize,
    pub fft_len: usize,
    pub window: Window,
}

impl FrameConfig {
    /// Default geometry for a given sample rate: 25 ms frames, 10 ms hop,
    /// Hann window, FFT length the next power of two above the frame.
    pub fn for_sample_rate(sample_rate_hz: u32) -> Self {
        let frame_len = ((sample_rate_hz as f64) * 0.025).round().max(1.0) as usize;
        let hop_len = ((sample_rate_hz as f64) * 0.010).round().max(1.0) as usize;
        FrameConfig {
            frame_len,
            hop_len,
            fft_len: next_pow2(frame_len),
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 {
            return Err(Error::Config("frame_len must be >= 1".into()));
        }
        if self.hop_len == 0 {
            return Err(Error::Config("hop_len must be >= 1".into()));
        }
        if !self.fft_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "fft_len {} is not a power of two",
                self.fft_len
            )));
        }
        if self.fft_len < self.frame_len {
            return Err(Error::Config(format!(
                "fft_len {} is shorter than frame_len {}",
                self.fft_len, self.frame_len
            )));
        }
        Ok(())
    }

    /// Number of frames produced for a signal of `len` samples: full frames
    /// only once the signal covers one frame, a single zero-padded frame
    /// otherwise.
    pub fn frame_count(&self, len: usize) -> usize {
        if len >= self.frame_len {
            1 + (len - self.frame_len) / self.hop_len
        } else {
            1
        }
    }
}

/// Smallest power of two >= `n` (and >= 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Slice `samples` into overlapping windowed frames (rows).
///
/// A signal shorter than one frame yields exactly one zero-padded frame;
/// trailing samples that do not fill a frame are dropped.
pub fn frame_signal(samples: &[f64], cfg: &FrameConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Domain("cannot frame an empty signal".into()));
    }
    let n_frames = cfg.frame_count(samples.len());
    let win = cfg.window.sample(cfg.frame_len);
    let mut out = Array2::zeros((n_frames, cfg.frame_len));
    for f in 0..n_frames {
        let start = f * cfg.hop_len;
        let take = cfg.frame_len.min(samples.len().saturating_sub(start));
        for i in 0..take {
            out[[f, i]] = samples[start + i] * win[i];
        }
    }
    Ok(out)
}

/// One-sided FFT magnitude of a single frame, zero-padded to `fft_len`.
/// Returns `fft_len / 2 + 1` non-negative values.
pub fn magnitude_spectrum(frame: &[f64], fft_len: usize) -> Result<Vec<f64>> {
    if !fft_len.is_power_of_two() {
        return Err(Error::Config(format!(
            "fft_len {fft_len} is not a power of two"
        )));
    }
    if frame.len() > fft_len {
        return Err(Error::Config(format!(
            "frame of {} samples does not fit fft_len {}",
            frame.len(),
            fft_len
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(fft_len);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft.process(&mut buf);
    Ok(buf[..fft_len / 2 + 1].iter().map(|c| c.norm()).collect())
}

/// Precomputed orthonormal DCT-II of a fixed length.
///
/// `apply` evaluates `out[k] = c_k * sum_n in[n] * cos(pi*(2n+1)*k / 2N)`
/// with `c_0 = sqrt(1/N)`, `c_k = sqrt(2/N)`; the transform preserves the
/// Euclidean norm of its input.
pub struct DctPlan {
    n: usize,
    table: Vec<f64>,
}

impl DctPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("DCT input must be non-empty".into()));
        }
        let nf = n as f64;
        let mut table = vec![0.0; n * n];
        for k in 0..n {
            let ck = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            for i in 0..n {
                table[k * n + i] =
                    ck * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * nf))
                        .cos();
            }
        }
        Ok(DctPlan { n, table })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n {
            return Err(Error::Contract(format!(
                "DCT plan of length {} applied to input of length {}",
                self.n,
                input.len()
            )));
        }
        let mut out = vec![0.0; self.n];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            let mut acc = 0.0;
            for (w, &x) in row.iter().zip(input) {
                acc += w * x;
            }
            *o = acc;
        }
        Ok(out)
    }
}

/// Orthonormal DCT-II of one vector. Equivalent to building a [`DctPlan`]
/// of matching length and applying it once.
pub fn dct2_orthonormal(input: &[f64]) -> Result<Vec<f64>> {
    DctPlan::new(input.len())?.apply(input)
}

/// Elementwise `ln(1 + x)`. Any negative entry is a domain error.
pub fn compress_log1p(matrix: &Array2<f64>) -> Result<Array2<f64>> {
    if let Some(((r, c), &v)) = matrix.indexed_iter().find(|(_, &v)| v < 0.0) {
        return Err(Error::Domain(format!(
            "log1p input must be non-negative; found {v} at row {r}, col {c}"
        )));
    }
    Ok(matrix.mapv(f64::ln_1p))
}

/// What the column axis of a [`SpectroMatrix`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    FrequencyHz,
    QuefrencyS,
    CepstralIndex,
    FilterIndex,
    CqtBin,
}

impl AxisKind {
    /// Stable single-byte code used by the feature-file format.
    pub fn code(self) -> u8 {
        match self {
            AxisKind::FrequencyHz => 0,
            AxisKind::QuefrencyS => 1,
            AxisKind::CepstralIndex => 2,
            AxisKind::FilterIndex => 3,
            AxisKind::CqtBin => 4,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(AxisKind::FrequencyHz),
            1 => Ok(AxisKind::QuefrencyS),
            2 => Ok(AxisKind::CepstralIndex),
            3 => Ok(AxisKind::FilterIndex),
            4 => Ok(AxisKind::CqtBin),
            other => Err(Error::Format(format!("unknown axis code {other}"))),
        }
    }
}

/// A time-by-bin feature grid with axis metadata.
///
/// Rows are analysis frames (or transform coefficients for time-axis
/// transforms), columns are bins along `axis`. `bin_spacing` is the column
/// step in the axis unit (1.0 for index-valued or geometric axes);
/// `frame_rate_hz` is the source frame rate, 0.0 when unknown (e.g. a grid
/// read back from disk).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroMatrix {
    pub data: Array2<f64>,
    pub axis: AxisKind,
    pub bin_spacing: f64,
    pub frame_rate_hz: f64,
}

impl SpectroMatrix {
    pub fn new(
        data: Array2<f64>,
        axis: AxisKind,
        bin_spacing: f64,
        frame_rate_hz: f64,
    ) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Domain(format!(
                "feature grid must be non-empty; got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(((r, c), &v)) = data.indexed_iter().find(|(_, &v)| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite feature value {v} at row {r}, col {c}"
            )));
        }
        if !(bin_spacing.is_finite() && bin_spacing > 0.0) {
            return Err(Error::Domain(format!("invalid bin spacing {bin_spacing}")));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz >= 0.0) {
            return Err(Error::Domain(format!("invalid frame rate {frame_rate_hz}")));
        }
        Ok(SpectroMatrix {
            data,
            axis,
            bin_spacing,
            frame_rate_hz,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.data.ncols()
    }
}
