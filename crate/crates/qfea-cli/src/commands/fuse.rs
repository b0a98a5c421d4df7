//! `qfea fuse`: combine score files by z-normalized weighted average.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qfea::metrics::{fuse_scores, read_scores, write_scores};
use qfea::{Error, Result};

use crate::manifest::{digest_file, guard_overwrite, manifest_sibling, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct FuseParams {
    /// System score files to fuse (repeat the flag or pass several paths).
    #[arg(long = "scores", num_args = 1.., required = true)]
    pub scores: Vec<PathBuf>,

    /// Reference score files for z-normalization, one per system
    /// (typically development scores). Defaults to each system's own file.
    #[arg(long = "dev-scores", num_args = 1..)]
    pub dev_scores: Option<Vec<PathBuf>>,

    /// Fusion weights, one per system (default equal).
    #[arg(long, num_args = 1..)]
    pub weights: Option<Vec<f64>>,

    /// Output score file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(params: &FuseParams, force: bool) -> Result<()> {
    guard_overwrite(&params.out, force)?;
    if let Some(dev) = &params.dev_scores {
        if dev.len() != params.scores.len() {
            return Err(Error::Contract(format!(
                "{} dev-score files for {} score files",
                dev.len(),
                params.scores.len()
            )));
        }
    }

    let sets = params
        .scores
        .iter()
        .map(|p| read_scores(p))
        .collect::<Result<Vec<_>>>()?;
    let references = params
        .dev_scores
        .as_ref()
        .map(|paths| paths.iter().map(|p| read_scores(p)).collect::<Result<Vec<_>>>())
        .transpose()?;

    let fused = fuse_scores(&sets, references.as_deref(), params.weights.as_deref())?;
    write_scores(&params.out, &fused)?;
    println!(
        "fused {} systems over {} trials into {}",
        sets.len(),
        fused.len(),
        params.out.display()
    );

    let mut inputs = Vec::new();
    for path in &params.scores {
        inputs.push(digest_file(path)?);
    }
    if let Some(dev) = &params.dev_scores {
        for path in dev {
            inputs.push(digest_file(path)?);
        }
    }
    let outputs = vec![params.out.to_string_lossy().into_owned()];
    let manifest = RunManifest::new("fuse", params, inputs, outputs)?;
    write_manifest(&manifest_sibling(&params.out), &manifest)?;
    Ok(())
}
