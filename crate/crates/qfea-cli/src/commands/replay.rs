//! `qfea replay`: re-run a recorded manifest. Inputs are verified against
//! their recorded digests first, so a replay either reproduces the original
//! outputs byte-for-byte or fails loudly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qfea::{Error, Result};

use crate::commands::dispatch;
use crate::manifest::{read_manifest, verify_inputs};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ReplayParams {
    /// Manifest recorded by a previous run.
    #[arg(long)]
    pub manifest: PathBuf,
}

pub fn run(params: &ReplayParams) -> Result<()> {
    let manifest = read_manifest(&params.manifest)?;
    let version = env!("CARGO_PKG_VERSION");
    if manifest.version != version {
        return Err(Error::Contract(format!(
            "manifest was written by version {} but this binary is {version}; \
             replays are only guaranteed within one version",
            manifest.version
        )));
    }
    verify_inputs(&manifest)?;
    println!(
        "replaying {} ({} inputs verified)",
        manifest.command,
        manifest.inputs.len()
    );
    dispatch(&manifest.command, manifest.params, true)
}
