//! Run manifests: a JSON snapshot of everything that determined a
//! command's outputs (resolved parameters, input content digests, output
//! paths, toolkit version). No timestamps, no hostnames: two runs with
//! equal manifests produce byte-identical outputs, and `qfea replay`
//! re-executes one.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qfea::{Error, Result};

pub const TOOL_NAME: &str = "qfea";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        params: impl Serialize,
        inputs: Vec<InputDigest>,
        outputs: Vec<String>,
    ) -> Result<Self> {
        Ok(RunManifest {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            params: serde_json::to_value(params)
                .map_err(|e| Error::Format(format!("cannot encode params: {e}")))?,
            inputs,
            outputs,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = qfea::fsio::read_bytes(path)?;
    Ok(InputDigest {
        path: path.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Format(format!("cannot encode manifest: {e}")))?;
    text.push('\n');
    qfea::fsio::write_bytes(path, text)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = qfea::fsio::read_text(path)?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("malformed manifest: {e}")))?;
    if manifest.tool != TOOL_NAME {
        return Err(Error::Format(format!(
            "manifest belongs to tool {:?}, not {TOOL_NAME:?}",
            manifest.tool
        )));
    }
    Ok(manifest)
}

/// Check that every recorded input still has the recorded content.
pub fn verify_inputs(manifest: &RunManifest) -> Result<()> {
    for input in &manifest.inputs {
        let current = digest_file(Path::new(&input.path))?;
        if current.sha256 != input.sha256 {
            return Err(Error::Contract(format!(
                "input {} changed since the manifest was written (sha256 {} != {})",
                input.path, current.sha256, input.sha256
            )));
        }
    }
    Ok(())
}

/// Manifest path for a command whose primary output is the file at `out`:
/// the full file name plus `.manifest.json`. Appending (rather than
/// swapping the extension) keeps outputs with a shared stem, such as
/// `ceps.scores` and `ceps.report`, from colliding on one manifest path.
pub fn manifest_sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Refuse to clobber an existing output unless `force` is set.
pub fn guard_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Config(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}
