//! `qfea score`: log-likelihood-ratio score for every protocol trial.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qfea::audio::parse_protocol;
use qfea::featfile::read_feature;
use qfea::gmm::{read_model, score_trial};
use qfea::metrics::{write_scores, ScoreSet};
use qfea::{Error, Result};

use crate::commands::extract::feature_path;
use crate::manifest::{digest_file, guard_overwrite, manifest_sibling, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Bona-fide model file.
    #[arg(long)]
    pub bona_model: PathBuf,

    /// Spoof model file.
    #[arg(long)]
    pub spoof_model: PathBuf,

    /// Protocol listing the trials to score.
    #[arg(long)]
    pub protocol: PathBuf,

    /// Directory of `<trial_id>.qfea` files for that protocol.
    #[arg(long)]
    pub features_dir: PathBuf,

    /// Output score file ("trial_id<TAB>score" lines).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(params: &ScoreParams, force: bool) -> Result<()> {
    guard_overwrite(&params.out, force)?;
    let bona = read_model(&params.bona_model)?;
    let spoof = read_model(&params.spoof_model)?;
    let protocol = parse_protocol(&params.protocol)?;

    let scores: Vec<Result<f64>> = protocol
        .records
        .par_iter()
        .map(|rec| {
            let grid = read_feature(&feature_path(&params.features_dir, &rec.trial_id))?;
            score_trial(&bona, &spoof, &grid)
                .map_err(|e| Error::Contract(format!("trial {}: {e}", rec.trial_id)))
        })
        .collect();

    let mut entries = Vec::with_capacity(scores.len());
    for (rec, score) in protocol.records.iter().zip(scores) {
        entries.push((rec.trial_id.clone(), score?));
    }
    let set = ScoreSet::new(entries)?;
    write_scores(&params.out, &set)?;
    println!("scored {} trials into {}", set.len(), params.out.display());

    let mut inputs = vec![
        digest_file(&params.bona_model)?,
        digest_file(&params.spoof_model)?,
        digest_file(&params.protocol)?,
    ];
    for rec in &protocol.records {
        inputs.push(digest_file(&feature_path(&params.features_dir, &rec.trial_id))?);
    }
    let outputs = vec![params.out.to_string_lossy().into_owned()];
    let manifest = RunManifest::new("score", params, inputs, outputs)?;
    write_manifest(&manifest_sibling(&params.out), &manifest)?;
    Ok(())
}
