//! `qfea train`: fit one mixture per class on pooled training features.

use std::path::PathBuf;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qfea::audio::{parse_protocol, ClassLabel};
use qfea::featfile::read_feature;
use qfea::gmm::{gmm_train, write_model, FeatureNorm, TrainedModel};
use qfea::{Error, Result};

use crate::commands::extract::feature_path;
use crate::manifest::{digest_file, guard_overwrite, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct TrainParams {
    /// Training-partition protocol.
    #[arg(long)]
    pub protocol: PathBuf,

    /// Directory of `<trial_id>.qfea` files for that protocol.
    #[arg(long)]
    pub features_dir: PathBuf,

    /// Directory receiving bona.qgmm and spoof.qgmm.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Mixture components per class model.
    #[arg(long, default_value_t = 64)]
    pub components: usize,

    /// Seed for mixture initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// EM iteration cap.
    #[arg(long, default_value_t = 25)]
    pub max_iters: usize,

    /// Stop once the per-frame average log-likelihood improves by less.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

/// Stack per-trial feature grids into one frames-by-dims matrix.
fn pool_frames(grids: &[(String, Array2<f64>)]) -> Result<Array2<f64>> {
    let dims = grids
        .first()
        .map(|(_, g)| g.ncols())
        .ok_or_else(|| Error::Contract("no trials to pool".into()))?;
    for (id, g) in grids {
        if g.ncols() != dims {
            return Err(Error::Contract(format!(
                "trial {id} has {} feature dims, expected {dims}",
                g.ncols()
            )));
        }
    }
    let total: usize = grids.iter().map(|(_, g)| g.nrows()).sum();
    let mut pooled = Array2::zeros((total, dims));
    let mut row = 0;
    for (_, g) in grids {
        pooled.slice_mut(ndarray::s![row..row + g.nrows(), ..]).assign(g);
        row += g.nrows();
    }
    Ok(pooled)
}

pub fn run(params: &TrainParams, force: bool) -> Result<()> {
    let protocol = parse_protocol(&params.protocol)?;
    std::fs::create_dir_all(&params.out_dir)?;
    let bona_path = params.out_dir.join("bona.qgmm");
    let spoof_path = params.out_dir.join("spoof.qgmm");
    guard_overwrite(&bona_path, force)?;
    guard_overwrite(&spoof_path, force)?;

    let grids: Vec<Result<(ClassLabel, String, Array2<f64>)>> = protocol
        .records
        .par_iter()
        .map(|rec| {
            let grid = read_feature(&feature_path(&params.features_dir, &rec.trial_id))?;
            Ok((rec.label, rec.trial_id.clone(), grid.data))
        })
        .collect();
    let mut bona_grids = Vec::new();
    let mut spoof_grids = Vec::new();
    for item in grids {
        let (label, id, data) = item?;
        match label {
            ClassLabel::Bonafide => bona_grids.push((id, data)),
            ClassLabel::Spoof => spoof_grids.push((id, data)),
        }
    }

    let bona_frames = pool_frames(&bona_grids)?;
    let spoof_frames = pool_frames(&spoof_grids)?;
    if bona_frames.ncols() != spoof_frames.ncols() {
        return Err(Error::Contract(format!(
            "bona fide features have {} dims, spoof {}",
            bona_frames.ncols(),
            spoof_frames.ncols()
        )));
    }

    // One normalization for the whole training partition, stored in both
    // model files so each is self-contained at scoring time.
    let all_frames = ndarray::concatenate(
        ndarray::Axis(0),
        &[bona_frames.view(), spoof_frames.view()],
    )
    .expect("equal dims checked above");
    let norm = FeatureNorm::fit(&all_frames)?;
    drop(all_frames);

    for (label, frames, path, seed) in [
        (ClassLabel::Bonafide, &bona_frames, &bona_path, params.seed),
        (ClassLabel::Spoof, &spoof_frames, &spoof_path, params.seed + 1),
    ] {
        let normed = norm.apply(frames)?;
        let outcome = gmm_train(
            &normed,
            label,
            params.components,
            seed,
            params.max_iters,
            params.tol,
        )?;
        println!(
            "{}: {} frames, {} EM iterations, final avg loglik {:.6}, {}",
            label.as_str(),
            normed.nrows(),
            outcome.avg_loglik.len(),
            outcome.avg_loglik.last().expect("at least one iteration"),
            if outcome.converged { "converged" } else { "iteration cap reached" },
        );
        write_model(
            path,
            &TrainedModel {
                gmm: outcome.model,
                norm: norm.clone(),
            },
        )?;
    }

    let mut inputs = vec![digest_file(&params.protocol)?];
    for rec in &protocol.records {
        inputs.push(digest_file(&feature_path(&params.features_dir, &rec.trial_id))?);
    }
    let outputs = vec![
        bona_path.to_string_lossy().into_owned(),
        spoof_path.to_string_lossy().into_owned(),
    ];
    let manifest = RunManifest::new("train", params, inputs, outputs)?;
    write_manifest(&params.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}
