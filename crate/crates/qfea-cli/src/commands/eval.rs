//! `qfea eval`: EER (and optionally min t-DCF) of a score file against a
//! protocol, written as diffable key=value lines.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qfea::audio::parse_protocol;
use qfea::metrics::{
    compute_eer, compute_min_tdcf, det_points, join_scores, read_scores, TdcfCostModel,
};
use qfea::{Error, Result};

use crate::manifest::{digest_file, guard_overwrite, manifest_sibling, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct EvalParams {
    /// Score file to evaluate.
    #[arg(long)]
    pub scores: PathBuf,

    /// Protocol carrying the ground-truth labels.
    #[arg(long)]
    pub protocol: PathBuf,

    /// Output report path.
    #[arg(long)]
    pub out: PathBuf,

    /// JSON cost-model file; enables the min_tdcf lines. Must carry the
    /// verifier operating point (p_miss_asv, p_fa_asv, p_miss_spoof_asv);
    /// priors and costs default to the standard values.
    #[arg(long)]
    pub cost_model: Option<PathBuf>,

    /// Optional DET curve dump ("far<TAB>frr" lines).
    #[arg(long)]
    pub det: Option<PathBuf>,
}

fn default_p_target() -> f64 {
    0.9405
}
fn default_p_nontarget() -> f64 {
    0.0095
}
fn default_p_spoof() -> f64 {
    0.05
}
fn default_c_miss_asv() -> f64 {
    1.0
}
fn default_c_fa_asv() -> f64 {
    10.0
}
fn default_c_miss_cm() -> f64 {
    1.0
}
fn default_c_fa_cm() -> f64 {
    10.0
}

/// On-disk cost model: the three verifier rates are required, everything
/// else defaults to the standard operating assumptions.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostModelFile {
    #[serde(default = "default_p_target")]
    p_target: f64,
    #[serde(default = "default_p_nontarget")]
    p_nontarget: f64,
    #[serde(default = "default_p_spoof")]
    p_spoof: f64,
    #[serde(default = "default_c_miss_asv")]
    c_miss_asv: f64,
    #[serde(default = "default_c_fa_asv")]
    c_fa_asv: f64,
    #[serde(default = "default_c_miss_cm")]
    c_miss_cm: f64,
    #[serde(default = "default_c_fa_cm")]
    c_fa_cm: f64,
    p_miss_asv: f64,
    p_fa_asv: f64,
    p_miss_spoof_asv: f64,
}

fn load_cost_model(path: &PathBuf) -> Result<TdcfCostModel> {
    let text = qfea::fsio::read_text(path)?;
    let file: CostModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("malformed cost model {}: {e}", path.display())))?;
    let model = TdcfCostModel {
        p_target: file.p_target,
        p_nontarget: file.p_nontarget,
        p_spoof: file.p_spoof,
        c_miss_asv: file.c_miss_asv,
        c_fa_asv: file.c_fa_asv,
        c_miss_cm: file.c_miss_cm,
        c_fa_cm: file.c_fa_cm,
        p_miss_asv: file.p_miss_asv,
        p_fa_asv: file.p_fa_asv,
        p_miss_spoof_asv: file.p_miss_spoof_asv,
    };
    model.validate()?;
    Ok(model)
}

pub fn run(params: &EvalParams, force: bool) -> Result<()> {
    guard_overwrite(&params.out, force)?;
    if let Some(det) = &params.det {
        guard_overwrite(det, force)?;
    }
    let protocol = parse_protocol(&params.protocol)?;
    let scores = read_scores(&params.scores)?;
    let labeled = join_scores(&protocol, &scores)?;

    let eer = compute_eer(&labeled.bona, &labeled.spoof)?;
    let mut report = String::new();
    let _ = writeln!(report, "eer_pct={:.6}", 100.0 * eer.eer);
    let _ = writeln!(report, "eer_threshold={:.6}", eer.threshold);
    let _ = writeln!(report, "n_bonafide={}", labeled.bona.len());
    let _ = writeln!(report, "n_spoof={}", labeled.spoof.len());
    if let Some(cost_path) = &params.cost_model {
        let cost = load_cost_model(cost_path)?;
        let tdcf = compute_min_tdcf(&labeled.bona, &labeled.spoof, &cost)?;
        let _ = writeln!(report, "min_tdcf={:.6}", tdcf.min_tdcf);
        let _ = writeln!(report, "min_tdcf_threshold={:.6}", tdcf.threshold);
    }
    qfea::fsio::write_bytes(&params.out, &report)?;
    print!("{report}");

    if let Some(det_path) = &params.det {
        let mut det_text = String::new();
        for (far, frr) in det_points(&labeled.bona, &labeled.spoof)? {
            let _ = writeln!(det_text, "{far:.6}\t{frr:.6}");
        }
        qfea::fsio::write_bytes(det_path, det_text)?;
    }

    let mut inputs = vec![digest_file(&params.scores)?, digest_file(&params.protocol)?];
    if let Some(cost_path) = &params.cost_model {
        inputs.push(digest_file(cost_path)?);
    }
    let mut outputs = vec![params.out.to_string_lossy().into_owned()];
    if let Some(det) = &params.det {
        outputs.push(det.to_string_lossy().into_owned());
    }
    let manifest = RunManifest::new("eval", params, inputs, outputs)?;
    write_manifest(&manifest_sibling(&params.out), &manifest)?;
    Ok(())
}
