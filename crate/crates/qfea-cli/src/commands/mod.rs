//! Subcommand implementations. Each command resolves its parameters into
//! a serializable params struct, does the work, and writes a RunManifest
//! next to its outputs so the run can be replayed byte-for-byte.

pub mod analyze;
pub mod eval;
pub mod extract;
pub mod fuse;
pub mod replay;
pub mod score;
pub mod synth;
pub mod train;

use qfea::dsp::{next_pow2, FrameConfig};
use qfea::{Error, Result};

/// Re-dispatch a manifest's command. Used by `replay`.
pub fn dispatch(command: &str, params: serde_json::Value, force: bool) -> Result<()> {
    fn decode<T: serde::de::DeserializeOwned>(params: serde_json::Value) -> Result<T> {
        serde_json::from_value(params)
            .map_err(|e| Error::Format(format!("manifest params do not fit the command: {e}")))
    }
    match command {
        "synth" => synth::run(&decode(params)?, force),
        "extract" => extract::run(&decode(params)?, force),
        "train" => train::run(&decode(params)?, force),
        "score" => score::run(&decode(params)?, force),
        "fuse" => fuse::run(&decode(params)?, force),
        "eval" => eval::run(&decode(params)?, force),
        "analyze" => analyze::run(&decode(params)?, force),
        other => Err(Error::Format(format!(
            "manifest names unknown command {other:?}"
        ))),
    }
}

/// Shared frame-geometry flags resolved against a waveform's sample rate.
pub fn build_frame_config(
    frame_ms: f64,
    hop_ms: f64,
    fft_len: usize,
    window: &str,
    sample_rate_hz: u32,
) -> Result<FrameConfig> {
    if !(frame_ms.is_finite() && frame_ms > 0.0 && hop_ms.is_finite() && hop_ms > 0.0) {
        return Err(Error::Config(format!(
            "frame ({frame_ms} ms) and hop ({hop_ms} ms) must be positive"
        )));
    }
    let fs = sample_rate_hz as f64;
    let frame_len = ((frame_ms / 1000.0) * fs).round().max(1.0) as usize;
    let hop_len = ((hop_ms / 1000.0) * fs).round().max(1.0) as usize;
    let cfg = FrameConfig {
        frame_len,
        hop_len,
        fft_len: if fft_len == 0 { next_pow2(frame_len) } else { fft_len },
        window: window.parse()?,
    };
    cfg.validate()?;
    Ok(cfg)
}
