//! Replay-chain flag grammar:
//! `alpha:tau_ms[,alpha:tau_ms...][;band:lo-hi][;noise:snr_db]`.
//!
//! Errors carry the byte position of the offending token so usage
//! messages can point at it.

use qfea::echo::{ms_to_samples, EchoSpec, ReplayChain};
use qfea::{Error, Result};

fn usage(pos: usize, message: impl Into<String>) -> Error {
    Error::Config(format!("chain syntax at byte {pos}: {}", message.into()))
}

fn parse_number(text: &str, pos: usize, what: &str) -> Result<f64> {
    text.parse()
        .map_err(|_| usage(pos, format!("unparseable {what} {text:?}")))
}

/// Parse one chain description at a given sample rate.
pub fn parse_chain(text: &str, sample_rate_hz: u32) -> Result<ReplayChain> {
    let mut taps = Vec::new();
    let mut band = None;
    let mut noise = None;

    let mut segments = Vec::new();
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        if c == ';' {
            segments.push((start, &text[start..i]));
            start = i + 1;
        }
    }
    segments.push((start, &text[start..]));

    let (tap_pos, tap_text) = segments[0];
    if tap_text.is_empty() {
        return Err(usage(tap_pos, "expected at least one alpha:tau_ms tap"));
    }
    let mut offset = tap_pos;
    for tap in tap_text.split(',') {
        let pos = offset;
        offset += tap.len() + 1;
        let Some((alpha_text, tau_text)) = tap.split_once(':') else {
            return Err(usage(pos, format!("tap {tap:?} is not alpha:tau_ms")));
        };
        if alpha_text.is_empty() || tau_text.is_empty() {
            return Err(usage(pos, format!("incomplete tap {tap:?}")));
        }
        let alpha = parse_number(alpha_text, pos, "attenuation")?;
        let tau_ms = parse_number(tau_text, pos + alpha_text.len() + 1, "delay")?;
        if !(tau_ms.is_finite() && tau_ms > 0.0) {
            return Err(usage(
                pos + alpha_text.len() + 1,
                format!("delay {tau_ms} ms must be positive"),
            ));
        }
        taps.push(EchoSpec::new(alpha, ms_to_samples(tau_ms, sample_rate_hz))?);
    }

    for &(pos, segment) in &segments[1..] {
        let Some((key, value)) = segment.split_once(':') else {
            return Err(usage(pos, format!("segment {segment:?} is not key:value")));
        };
        match key {
            "band" => {
                if band.is_some() {
                    return Err(usage(pos, "band given twice"));
                }
                let value_pos = pos + key.len() + 1;
                let Some((lo_text, hi_text)) = value.split_once('-') else {
                    return Err(usage(value_pos, format!("band {value:?} is not lo-hi")));
                };
                let lo = parse_number(lo_text, value_pos, "band edge")?;
                let hi = parse_number(hi_text, value_pos + lo_text.len() + 1, "band edge")?;
                band = Some((lo, hi));
            }
            "noise" => {
                if noise.is_some() {
                    return Err(usage(pos, "noise given twice"));
                }
                noise = Some(parse_number(value, pos + key.len() + 1, "noise SNR")?);
            }
            other => {
                return Err(usage(pos, format!("unknown segment {other:?}")));
            }
        }
    }

    ReplayChain::new(taps, band, noise)
}

/// Render a chain back into flag syntax (used by manifests).
pub fn format_chain(chain: &ReplayChain, sample_rate_hz: u32) -> String {
    let fs = sample_rate_hz as f64;
    let mut out = chain
        .taps()
        .iter()
        .map(|tap| format!("{}:{}", tap.alpha, tap.tau_samples as f64 * 1000.0 / fs))
        .collect::<Vec<_>>()
        .join(",");
    if let Some((lo, hi)) = chain.band_hz() {
        out.push_str(&format!(";band:{lo}-{hi}"));
    }
    if let Some(snr) = chain.noise_snr_db() {
        out.push_str(&format!(";noise:{snr}"));
    }
    out
}
