//! Diagonal-covariance Gaussian mixtures: EM training, average
//! log-likelihood scoring, and the on-disk model format.
//!
//! Each class (bona fide, spoof) gets its own mixture trained on pooled
//! per-frame features; a trial is scored by the difference of per-frame
//! average log-likelihoods under the two models. Feature normalization
//! statistics travel inside the model file so scoring needs nothing but
//! the model and the raw features.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::audio::ClassLabel;
use crate::dsp::SpectroMatrix;
use crate::error::{Error, Result};

/// Relative variance floor: each dimension's variance never drops below
/// this fraction of the training data's global variance in that dimension.
pub const VARIANCE_FLOOR_FACTOR: f64 = 1e-6;

/// Per-dimension affine normalization fitted on a training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureNorm {
    /// Fit mean and (population) standard deviation per column. A column
    /// with vanishing spread gets unit scale: it carries no information
    /// and normalizes to zero.
    pub fn fit(frames: &Array2<f64>) -> Result<Self> {
        let (t, d) = frames.dim();
        if t == 0 || d == 0 {
            return Err(Error::Domain("cannot fit normalization on empty data".into()));
        }
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for c in 0..d {
            let col = frames.column(c);
            let m = col.sum() / t as f64;
            let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / t as f64;
            mean[c] = m;
            let s = var.sqrt();
            std[c] = if s < 1e-12 { 1.0 } else { s };
        }
        Ok(FeatureNorm { mean, std })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, frames: &Array2<f64>) -> Result<Array2<f64>> {
        if frames.ncols() != self.dims() {
            return Err(Error::Contract(format!(
                "normalization fitted on {} dims applied to {} dims",
                self.dims(),
                frames.ncols()
            )));
        }
        let mut out = frames.clone();
        for mut row in out.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        Ok(out)
    }
}

/// A trained diagonal-covariance mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub trained_on: ClassLabel,
    /// Component weights, summing to 1.
    pub weights: Vec<f64>,
    /// `n_components x dims` component means.
    pub means: Array2<f64>,
    /// `n_components x dims` per-dimension variances, all positive.
    pub variances: Array2<f64>,
}

impl GmmModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.ncols()
    }
}

/// Training result: the model plus the average log-likelihood recorded at
/// every E-step (non-decreasing under EM).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GmmModel,
    pub avg_loglik: Vec<f64>,
    pub converged: bool,
}

fn global_variance(flat: &[f64], t: usize, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for row in flat.chunks_exact(d) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= t as f64;
    }
    let mut var = vec![0.0; d];
    for row in flat.chunks_exact(d) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            let diff = x - m;
            *v += diff * diff;
        }
    }
    for v in &mut var {
        *v /= t as f64;
    }
    var
}

/// k-means++-style seeding: first center uniform, later centers drawn with
/// probability proportional to squared distance from the chosen set.
fn seed_means(flat: &[f64], t: usize, d: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..t));
    let mut d2 = vec![f64::INFINITY; t];
    while chosen.len() < k {
        let last = *chosen.last().unwrap();
        let center = &flat[last * d..(last + 1) * d];
        for (i, dist) in d2.iter_mut().enumerate() {
            let row = &flat[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for (x, c) in row.iter().zip(center) {
                let diff = x - c;
                acc += diff * diff;
            }
            if acc < *dist {
                *dist = acc;
            }
        }
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = t - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..t)
        };
        chosen.push(next);
    }
    chosen
}

struct Params {
    log_weights: Vec<f64>,
    means: Vec<f64>,     // k * d
    variances: Vec<f64>, // k * d
    gauss_const: Vec<f64>,
}

impl Params {
    fn refresh_consts(&mut self, k: usize, d: usize) {
        self.gauss_const = (0..k)
            .map(|c| {
                let var = &self.variances[c * d..(c + 1) * d];
                -0.5 * var
                    .iter()
                    .map(|v| (std::f64::consts::TAU * v).ln())
                    .sum::<f64>()
            })
            .collect();
    }

    /// Component log-densities plus log-weight for one frame.
    fn weighted_log_density(&self, frame: &[f64], c: usize, d: usize) -> f64 {
        let mean = &self.means[c * d..(c + 1) * d];
        let var = &self.variances[c * d..(c + 1) * d];
        let mut acc = 0.0;
        for ((x, m), v) in frame.iter().zip(mean).zip(var) {
            let diff = x - m;
            acc += diff * diff / v;
        }
        self.log_weights[c] + self.gauss_const[c] - 0.5 * acc
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Train a mixture with EM from k-means++ seeding. Stops after `max_iters`
/// EM iterations or once the average log-likelihood improves by less than
/// `tol`. Fully determined by `(frames, n_components, seed, max_iters,
/// tol)` regardless of thread count.
pub fn gmm_train(
    frames: &Array2<f64>,
    trained_on: ClassLabel,
    n_components: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<TrainOutcome> {
    let (t, d) = frames.dim();
    if n_components == 0 {
        return Err(Error::Config("n_components must be >= 1".into()));
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be >= 1".into()));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Config(format!("tol {tol} must be non-negative")));
    }
    if d == 0 {
        return Err(Error::Domain("features must have at least one dimension".into()));
    }
    if t < n_components {
        return Err(Error::Contract(format!(
            "{t} frames cannot support {n_components} components"
        )));
    }
    if let Some(v) = frames.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite feature value {v}")));
    }

    let owned;
    let flat: &[f64] = match frames.as_slice() {
        Some(s) => s,
        None => {
            owned = frames.to_owned();
            owned.as_slice().expect("owned array is standard layout")
        }
    };

    let gvar = global_variance(flat, t, d);
    let floor: Vec<f64> = gvar
        .iter()
        .map(|v| (VARIANCE_FLOOR_FACTOR * v).max(1e-12))
        .collect();
    let init_var: Vec<f64> = gvar.iter().zip(&floor).map(|(v, f)| v.max(*f)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n_components;
    let seeds = seed_means(flat, t, d, k, &mut rng);
    let mut params = Params {
        log_weights: vec![(1.0 / k as f64).ln(); k],
        means: seeds
            .iter()
            .flat_map(|&i| flat[i * d..(i + 1) * d].iter().copied())
            .collect(),
        variances: (0..k).flat_map(|_| init_var.iter().copied()).collect(),
        gauss_const: Vec::new(),
    };
    params.refresh_consts(k, d);

    let mut lls = Vec::with_capacity(max_iters);
    let mut resp = vec![0.0; t * k];
    let mut reseeded = vec![false; k];
    let mut converged = false;

    for _iter in 0..max_iters {
        // E-step: responsibilities and per-frame log-likelihoods. Rows are
        // independent; the total is summed sequentially so thread count
        // cannot change the result.
        let frame_lls: Vec<f64> = resp
            .par_chunks_mut(k)
            .enumerate()
            .map(|(i, row)| {
                let frame = &flat[i * d..(i + 1) * d];
                for (c, r) in row.iter_mut().enumerate() {
                    *r = params.weighted_log_density(frame, c, d);
                }
                let ll = log_sum_exp(row);
                for r in row.iter_mut() {
                    *r = (*r - ll).exp();
                }
                ll
            })
            .collect();
        let avg_ll = frame_lls.iter().sum::<f64>() / t as f64;
        if let Some(&prev) = lls.last() {
            lls.push(avg_ll);
            if (avg_ll - prev).abs() < tol {
                converged = true;
                break;
            }
        } else {
            lls.push(avg_ll);
        }

        // M-step, one component at a time (independent, so parallel over
        // components keeps summation order fixed).
        let updates: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..k)
            .into_par_iter()
            .map(|c| {
                let mut nc = 0.0;
                let mut mean = vec![0.0; d];
                for i in 0..t {
                    let r = resp[i * k + c];
                    nc += r;
                    let frame = &flat[i * d..(i + 1) * d];
                    for (m, x) in mean.iter_mut().zip(frame) {
                        *m += r * x;
                    }
                }
                if nc > 0.0 {
                    for m in &mut mean {
                        *m /= nc;
                    }
                }
                let mut var = vec![0.0; d];
                for i in 0..t {
                    let r = resp[i * k + c];
                    let frame = &flat[i * d..(i + 1) * d];
                    for (v, (x, m)) in var.iter_mut().zip(frame.iter().zip(&mean)) {
                        let diff = x - m;
                        *v += r * diff * diff;
                    }
                }
                if nc > 0.0 {
                    for v in &mut var {
                        *v /= nc;
                    }
                }
                (nc, mean, var)
            })
            .collect();

        let mut weight_total = 0.0;
        for (c, (nc, mean, var)) in updates.into_iter().enumerate() {
            let healthy = nc > 1e-10
                && mean.iter().all(|m| m.is_finite())
                && var.iter().all(|v| v.is_finite());
            if healthy {
                params.log_weights[c] = nc; // raw mass for now
                params.means[c * d..(c + 1) * d].copy_from_slice(&mean);
                for (slot, (v, f)) in params.variances[c * d..(c + 1) * d]
                    .iter_mut()
                    .zip(var.iter().zip(&floor))
                {
                    *slot = v.max(*f);
                }
            } else {
                // A starved component gets one fresh start on a random
                // frame; a second collapse is a hard error.
                if reseeded[c] {
                    return Err(Error::DegenerateScores(format!(
                        "mixture component {c} collapsed twice during EM"
                    )));
                }
                reseeded[c] = true;
                let pick = rng.random_range(0..t);
                params.log_weights[c] = 1.0;
                params.means[c * d..(c + 1) * d]
                    .copy_from_slice(&flat[pick * d..(pick + 1) * d]);
                params.variances[c * d..(c + 1) * d].copy_from_slice(&init_var);
            }
            weight_total += params.log_weights[c];
        }
        for w in &mut params.log_weights {
            *w = (*w / weight_total).ln();
        }
        params.refresh_consts(k, d);
    }

    let weights: Vec<f64> = params.log_weights.iter().map(|lw| lw.exp()).collect();
    let model = GmmModel {
        trained_on,
        weights,
        means: Array2::from_shape_vec((k, d), params.means).expect("k*d means"),
        variances: Array2::from_shape_vec((k, d), params.variances).expect("k*d variances"),
    };
    Ok(TrainOutcome {
        model,
        avg_loglik: lls,
        converged,
    })
}

/// Per-frame average log-likelihood of `frames` under `model`.
pub fn gmm_loglik(model: &GmmModel, frames: &Array2<f64>) -> Result<f64> {
    let (t, d) = frames.dim();
    if t == 0 {
        return Err(Error::Domain("cannot score zero frames".into()));
    }
    if d != model.dims() {
        return Err(Error::Contract(format!(
            "model has {} dims, features have {d}",
            model.dims()
        )));
    }
    let k = model.n_components();
    let mut params = Params {
        log_weights: model.weights.iter().map(|w| w.ln()).collect(),
        means: model.means.iter().copied().collect(),
        variances: model.variances.iter().copied().collect(),
        gauss_const: Vec::new(),
    };
    params.refresh_consts(k, d);

    let owned;
    let flat: &[f64] = match frames.as_slice() {
        Some(s) => s,
        None => {
            owned = frames.to_owned();
            owned.as_slice().expect("owned array is standard layout")
        }
    };
    let frame_lls: Vec<f64> = (0..t)
        .into_par_iter()
        .map(|i| {
            let frame = &flat[i * d..(i + 1) * d];
            let logs: Vec<f64> = (0..k)
                .map(|c| params.weighted_log_density(frame, c, d))
                .collect();
            log_sum_exp(&logs)
        })
        .collect();
    Ok(frame_lls.iter().sum::<f64>() / t as f64)
}

/// Log-likelihood ratio: bona-fide average log-likelihood minus spoof.
pub fn llr_score(
    bona: &GmmModel,
    spoof: &GmmModel,
    frames: &Array2<f64>,
) -> Result<f64> {
    Ok(gmm_loglik(bona, frames)? - gmm_loglik(spoof, frames)?)
}

/// A mixture bundled with the normalization fitted on its training corpus:
/// everything needed to score raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub gmm: GmmModel,
    pub norm: FeatureNorm,
}

impl TrainedModel {
    /// Average log-likelihood of a raw feature grid, normalization included.
    pub fn loglik(&self, features: &SpectroMatrix) -> Result<f64> {
        let normed = self.norm.apply(&features.data)?;
        gmm_loglik(&self.gmm, &normed)
    }
}

/// Score one trial: each model applies its own stored normalization.
pub fn score_trial(
    bona: &TrainedModel,
    spoof: &TrainedModel,
    features: &SpectroMatrix,
) -> Result<f64> {
    Ok(bona.loglik(features)? - spoof.loglik(features)?)
}

const MODEL_MAGIC: &[u8; 4] = b"QGMM";
const MODEL_VERSION: u16 = 1;

fn class_code(label: ClassLabel) -> u8 {
    match label {
        ClassLabel::Bonafide => 0,
        ClassLabel::Spoof => 1,
    }
}

fn class_from_code(code: u8) -> Result<ClassLabel> {
    match code {
        0 => Ok(ClassLabel::Bonafide),
        1 => Ok(ClassLabel::Spoof),
        other => Err(Error::Format(format!("unknown class code {other}"))),
    }
}

/// Serialize a model: magic `QGMM`, version, class code, dims, component
/// count, then weights, means, variances, normalization mean and std, all
/// little-endian f64.
pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let k = model.gmm.n_components();
    let d = model.gmm.dims();
    if model.norm.dims() != d {
        return Err(Error::Contract(format!(
            "normalization dims {} do not match model dims {d}",
            model.norm.dims()
        )));
    }
    let mut out = Vec::with_capacity(15 + 8 * (k + 2 * k * d + 2 * d));
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.push(class_code(model.gmm.trained_on));
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    let mut push_all = |values: &mut dyn Iterator<Item = f64>| {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    push_all(&mut model.gmm.weights.iter().copied());
    push_all(&mut model.gmm.means.iter().copied());
    push_all(&mut model.gmm.variances.iter().copied());
    push_all(&mut model.norm.mean.iter().copied());
    push_all(&mut model.norm.std.iter().copied());
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < 15 {
        return Err(Error::Format("file too short for a model header".into()));
    }
    if &bytes[0..4] != MODEL_MAGIC {
        return Err(Error::Format("missing QGMM magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version} (expected {MODEL_VERSION})"
        )));
    }
    let trained_on = class_from_code(bytes[6])?;
    let d = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    if d == 0 || k == 0 {
        return Err(Error::Format(format!("empty model ({k} components, {d} dims)")));
    }
    let n_values = k + 2 * k * d + 2 * d;
    let expect = n_values
        .checked_mul(8)
        .ok_or_else(|| Error::Format("model dimensions overflow".into()))?;
    let payload = &bytes[15..];
    if payload.len() != expect {
        return Err(Error::Corrupt(format!(
            "payload holds {} bytes, header promises {expect}",
            payload.len()
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let weights = take(k);
    let means = take(k * d);
    let variances = take(k * d);
    let norm_mean = take(d);
    let norm_std = take(d);

    let weight_sum: f64 = weights.iter().sum();
    if !weights.iter().all(|w| w.is_finite() && *w >= 0.0) || (weight_sum - 1.0).abs() > 1e-6 {
        return Err(Error::Corrupt(format!(
            "component weights sum to {weight_sum}, expected 1"
        )));
    }
    if !variances.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::Corrupt("non-positive variance in model".into()));
    }
    if !means.iter().all(|v| v.is_finite())
        || !norm_mean.iter().all(|v| v.is_finite())
        || !norm_std.iter().all(|v| v.is_finite() && *v > 0.0)
    {
        return Err(Error::Corrupt("non-finite model parameters".into()));
    }

    Ok(TrainedModel {
        gmm: GmmModel {
            trained_on,
            weights,
            means: Array2::from_shape_vec((k, d), means).expect("k*d means"),
            variances: Array2::from_shape_vec((k, d), variances).expect("k*d variances"),
        },
        norm: FeatureNorm {
            mean: norm_mean,
            std: norm_std,
        },
    })
}

pub fn write_model(path: &std::path::Path, model: &TrainedModel) -> Result<()> {
    crate::fsio::write_bytes(path, encode_model(model)?)
}

pub fn read_model(path: &std::path::Path) -> Result<TrainedModel> {
    decode_model(&crate::fsio::read_bytes(path)?)
}
