//! Waveform and trial-list I/O.
//!
//! Audio lives in plain RIFF/WAVE files restricted to the one encoding the
//! toolkit traffics in: mono 16-bit PCM, little-endian. Trial lists use the
//! five-column whitespace-separated protocol format
//! (`speaker_id trial_id environment attack_id key`).

use std::path::Path;

use crate::error::{Error, Result};

/// Scale between normalized samples and 16-bit PCM codes.
const PCM_SCALE: f64 = 32768.0;

/// A mono audio signal. Samples are finite and the signal is non-empty;
/// both are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("waveform must be non-empty".into()));
        }
        if sample_rate_hz == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if let Some((i, &v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite sample {v} at index {i}"
            )));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

fn chunk_id(bytes: &[u8], at: usize) -> &[u8] {
    &bytes[at..at + 4]
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Decode a WAV image. Only mono 16-bit integer PCM is accepted; anything
/// structurally broken is a format error, valid-but-different encodings are
/// unsupported-format errors.
pub fn parse_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 {
        return Err(Error::Format("file too short for a RIFF header".into()));
    }
    if chunk_id(bytes, 0) != b"RIFF" {
        return Err(Error::Format("missing RIFF magic".into()));
    }
    if chunk_id(bytes, 8) != b"WAVE" {
        return Err(Error::Format("missing WAVE form type".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = chunk_id(bytes, pos);
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| Error::Format("chunk size overflows".into()))?;
        if body_end > bytes.len() {
            return Err(Error::Corrupt(format!(
                "chunk '{}' claims {size} bytes but only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - body_start
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some((
                    read_u16(bytes, body_start),
                    read_u16(bytes, body_start + 2),
                    read_u32(bytes, body_start + 4),
                    read_u16(bytes, body_start + 14),
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("no data chunk".into()))?;
    if format != 1 {
        return Err(Error::Unsupported(format!(
            "audio format tag {format}; only integer PCM (1) is handled"
        )));
    }
    if channels != 1 {
        return Err(Error::Unsupported(format!(
            "{channels} channels; only mono is handled"
        )));
    }
    if bits != 16 {
        return Err(Error::Unsupported(format!(
            "{bits}-bit samples; only 16-bit is handled"
        )));
    }
    if rate == 0 {
        return Err(Error::Format("sample rate of zero".into()));
    }
    if data.len() % 2 != 0 {
        return Err(Error::Corrupt(
            "data chunk holds a partial 16-bit sample".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::Format("empty data chunk".into()));
    }

    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / PCM_SCALE)
        .collect();
    Waveform::new(samples, rate)
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    parse_wav(&crate::fsio::read_bytes(path)?)
}

/// Encode to mono 16-bit PCM. Samples are clamped to [-1, 1], scaled by
/// 32768, rounded to nearest, and saturated at the i16 rails, so 1.0 maps
/// to 32767 and -1.0 to -32768.
pub fn encode_wav(wave: &Waveform) -> Result<Vec<u8>> {
    if let Some((i, &v)) = wave.samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite sample {v} at index {i}"
        )));
    }
    let data_len = wave.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // integer PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&wave.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(wave.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &x in &wave.samples {
        let q = (x.clamp(-1.0, 1.0) * PCM_SCALE).round();
        let code = q.clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&code.to_le_bytes());
    }
    Ok(out)
}

pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    crate::fsio::write_bytes(path, encode_wav(wave)?)
}

/// Ground-truth class of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Bonafide,
    Spoof,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Bonafide => "bonafide",
            ClassLabel::Spoof => "spoof",
        }
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonafide" => Ok(ClassLabel::Bonafide),
            "spoof" => Ok(ClassLabel::Spoof),
            other => Err(Error::Config(format!("unknown class key '{other}'"))),
        }
    }
}

/// Corpus partition a trial list belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Dev,
    Eval,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Eval => "eval",
        }
    }

    /// Single-letter tag embedded in generated trial ids.
    pub fn tag(self) -> char {
        match self {
            Partition::Train => 'T',
            Partition::Dev => 'D',
            Partition::Eval => 'E',
        }
    }
}

impl std::str::FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "dev" => Ok(Partition::Dev),
            "eval" => Ok(Partition::Eval),
            other => Err(Error::Config(format!("unknown partition '{other}'"))),
        }
    }
}

/// One line of a protocol file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub speaker_id: String,
    pub trial_id: String,
    pub environment: String,
    pub attack_id: String,
    pub label: ClassLabel,
}

/// An ordered trial list with unique trial ids. `partition` is caller
/// attribution; the file format itself does not carry it.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub records: Vec<TrialRecord>,
    pub partition: Option<Partition>,
}

impl Protocol {
    pub fn new(records: Vec<TrialRecord>, partition: Option<Partition>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !seen.insert(r.trial_id.as_str()) {
                return Err(Error::Duplicate(r.trial_id.clone()));
            }
        }
        Ok(Protocol { records, partition })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

/// Parse protocol text: five whitespace-separated columns per non-empty
/// line, the fifth being `bonafide` or `spoof`. Errors carry 1-based line
/// numbers; a repeated trial id is a duplicate error.
pub fn parse_protocol_text(text: &str) -> Result<Protocol> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 5 {
            return Err(Error::parse(
                idx + 1,
                format!("expected 5 columns, found {}", cols.len()),
            ));
        }
        let label = cols[4]
            .parse::<ClassLabel>()
            .map_err(|_| Error::parse(idx + 1, format!("unknown class key '{}'", cols[4])))?;
        records.push(TrialRecord {
            speaker_id: cols[0].to_string(),
            trial_id: cols[1].to_string(),
            environment: cols[2].to_string(),
            attack_id: cols[3].to_string(),
            label,
        });
    }
    Protocol::new(records, None)
}

pub fn parse_protocol(path: &Path) -> Result<Protocol> {
    parse_protocol_text(&crate::fsio::read_text(path)?)
}

pub fn write_protocol(path: &Path, protocol: &Protocol) -> Result<()> {
    let mut out = String::new();
    for r in &protocol.records {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            r.speaker_id,
            r.trial_id,
            r.environment,
            r.attack_id,
            r.label.as_str()
        ));
    }
    crate::fsio::write_bytes(path, out)
}
