//! Detection metrics and score handling: equal error rate, minimum
//! normalized tandem detection cost, DET curves, z-normalization, and
//! weighted score fusion.
//!
//! Conventions used throughout: higher score means more bona fide. The
//! false rejection rate at threshold `t` counts bona fide trials scoring
//! strictly below `t`; the false acceptance rate counts spoof trials
//! scoring at or above `t`. Sweeps evaluate every distinct score plus a
//! `+inf` sentinel, so both the reject-nothing and reject-everything
//! operating points are always considered.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::audio::{ClassLabel, Protocol};
use crate::error::{Error, Result};

/// Scores keyed by trial id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub entries: Vec<(String, f64)>,
}

impl ScoreSet {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (id, score) in &entries {
            if !score.is_finite() {
                return Err(Error::Domain(format!("non-finite score for trial {id}")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Duplicate(format!("trial {id} scored twice")));
            }
        }
        Ok(ScoreSet { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, trial_id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(id, _)| id == trial_id)
            .map(|(_, s)| *s)
    }
}

/// Parse `trial_id<TAB>score` lines.
pub fn parse_scores_text(text: &str) -> Result<ScoreSet> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(line_no, "missing trial id"))?;
        let raw = parts
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing score column"))?;
        if parts.next().is_some() {
            return Err(Error::parse(line_no, "expected exactly two tab-separated columns"));
        }
        let score: f64 = raw
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("unparseable score {raw:?}")))?;
        entries.push((id.to_string(), score));
    }
    ScoreSet::new(entries)
}

pub fn format_scores(scores: &ScoreSet) -> String {
    let mut out = String::new();
    for (id, score) in &scores.entries {
        let _ = writeln!(out, "{id}\t{score:.6}");
    }
    out
}

pub fn read_scores(path: &Path) -> Result<ScoreSet> {
    parse_scores_text(&crate::fsio::read_text(path)?)
}

pub fn write_scores(path: &Path, scores: &ScoreSet) -> Result<()> {
    crate::fsio::write_bytes(path, format_scores(scores))
}

/// Scores split by ground-truth class.
#[derive(Debug, Clone)]
pub struct LabeledScores {
    pub bona: Vec<f64>,
    pub spoof: Vec<f64>,
}

/// Join a score set against a protocol. Every protocol trial must be
/// scored and every score must belong to the protocol; violations report
/// the offending ids.
pub fn join_scores(protocol: &Protocol, scores: &ScoreSet) -> Result<LabeledScores> {
    let mut missing = Vec::new();
    let mut bona = Vec::new();
    let mut spoof = Vec::new();
    for rec in &protocol.records {
        match scores.get(&rec.trial_id) {
            Some(s) => match rec.label {
                ClassLabel::Bonafide => bona.push(s),
                ClassLabel::Spoof => spoof.push(s),
            },
            None => missing.push(rec.trial_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Contract(format!(
            "{} protocol trials have no score (first: {})",
            missing.len(),
            missing[..missing.len().min(5)].join(", ")
        )));
    }
    let known: BTreeSet<&str> = protocol.records.iter().map(|r| r.trial_id.as_str()).collect();
    let extra: Vec<&str> = scores
        .entries
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !known.contains(id))
        .collect();
    if !extra.is_empty() {
        return Err(Error::Contract(format!(
            "{} scored trials are not in the protocol (first: {})",
            extra.len(),
            extra[..extra.len().min(5)].join(", ")
        )));
    }
    Ok(LabeledScores { bona, spoof })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    /// Equal error rate in [0, 1].
    pub eer: f64,
    /// Sweep threshold where false rejection and false acceptance are
    /// closest; scoring at or above it accepts a trial as bona fide.
    pub threshold: f64,
}

fn check_scores(name: &str, scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::DegenerateScores(format!("no {name} scores")));
    }
    if let Some(v) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite {name} score {v}")));
    }
    Ok(())
}

/// Threshold sweep candidates: all distinct scores ascending, then +inf.
fn sweep_candidates(bona: &[f64], spoof: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = bona.iter().chain(spoof).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    all.dedup();
    all.push(f64::INFINITY);
    all
}

/// Error counts at a threshold: bona fide below it, spoof at or above it.
fn error_counts(bona: &[f64], spoof: &[f64], threshold: f64) -> (usize, usize) {
    let fr = bona.iter().filter(|s| **s < threshold).count();
    let fa = spoof.iter().filter(|s| **s >= threshold).count();
    (fr, fa)
}

/// Equal error rate of a bona-fide-high scoring system.
///
/// The sweep difference `FRR - FAR` is non-decreasing in the threshold.
/// An exact crossing (detected with integer cross-multiplication, so no
/// rounding is involved) gives the EER directly; otherwise the two rates
/// are interpolated linearly between the candidates straddling the sign
/// change.
pub fn compute_eer(bona: &[f64], spoof: &[f64]) -> Result<EerResult> {
    check_scores("bona fide", bona)?;
    check_scores("spoof", spoof)?;
    let nb = bona.len();
    let ns = spoof.len();
    let candidates = sweep_candidates(bona, spoof);

    let mut prev: Option<(f64, usize, usize)> = None; // (threshold, fr, fa)
    for &theta in &candidates {
        let (fr, fa) = error_counts(bona, spoof, theta);
        // FRR == FAR exactly iff fr * ns == fa * nb.
        if fr * ns == fa * nb {
            return Ok(EerResult {
                eer: fr as f64 / nb as f64,
                threshold: theta,
            });
        }
        let d = fr as f64 / nb as f64 - fa as f64 / ns as f64;
        if d > 0.0 {
            let (p_theta, p_fr, p_fa) = prev.expect("difference starts negative");
            let frr0 = p_fr as f64 / nb as f64;
            let far0 = p_fa as f64 / ns as f64;
            let frr1 = fr as f64 / nb as f64;
            let far1 = fa as f64 / ns as f64;
            let d0 = frr0 - far0;
            let d1 = frr1 - far1;
            let t = -d0 / (d1 - d0);
            let eer = frr0 + t * (frr1 - frr0);
            // Report the candidate whose two rates are closest; ties take
            // the lower threshold.
            let threshold = if d0.abs() <= d1.abs() { p_theta } else { theta };
            return Ok(EerResult { eer, threshold });
        }
        prev = Some((theta, fr, fa));
    }
    unreachable!("difference reaches +1 at the +inf sentinel");
}

/// DET curve: (false acceptance, false rejection) at every sweep
/// candidate plus the accept-everything point, consecutive duplicates
/// removed. Starts at (1, 0) and ends at (0, 1).
pub fn det_points(bona: &[f64], spoof: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_scores("bona fide", bona)?;
    check_scores("spoof", spoof)?;
    let nb = bona.len() as f64;
    let ns = spoof.len() as f64;
    let mut pts = vec![(1.0, 0.0)];
    for &theta in &sweep_candidates(bona, spoof) {
        let (fr, fa) = error_counts(bona, spoof, theta);
        let p = (fa as f64 / ns, fr as f64 / nb);
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    Ok(pts)
}

/// Tandem detection cost parameters: class priors, per-error costs, and
/// the fixed operating point of the downstream speaker verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdcfCostModel {
    pub p_target: f64,
    pub p_nontarget: f64,
    pub p_spoof: f64,
    pub c_miss_asv: f64,
    pub c_fa_asv: f64,
    pub c_miss_cm: f64,
    pub c_fa_cm: f64,
    /// Verifier miss rate on target speakers at its operating threshold.
    pub p_miss_asv: f64,
    /// Verifier false acceptance rate on zero-effort impostors.
    pub p_fa_asv: f64,
    /// Verifier miss rate on spoofed trials.
    pub p_miss_spoof_asv: f64,
}

impl TdcfCostModel {
    /// Standard priors and costs; the verifier operating point must still
    /// be supplied by the caller.
    pub fn with_asv_rates(p_miss_asv: f64, p_fa_asv: f64, p_miss_spoof_asv: f64) -> Self {
        TdcfCostModel {
            p_target: 0.9405,
            p_nontarget: 0.0095,
            p_spoof: 0.05,
            c_miss_asv: 1.0,
            c_fa_asv: 10.0,
            c_miss_cm: 1.0,
            c_fa_cm: 10.0,
            p_miss_asv,
            p_fa_asv,
            p_miss_spoof_asv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let priors = [self.p_target, self.p_nontarget, self.p_spoof];
        if priors.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Config("class priors must be positive".into()));
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("class priors sum to {sum}, expected 1")));
        }
        let costs = [self.c_miss_asv, self.c_fa_asv, self.c_miss_cm, self.c_fa_cm];
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Config("detection costs must be positive".into()));
        }
        let rates = [self.p_miss_asv, self.p_fa_asv, self.p_miss_spoof_asv];
        if rates.iter().any(|r| !(r.is_finite() && (0.0..=1.0).contains(r))) {
            return Err(Error::Config("verifier error rates must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Effective countermeasure miss and false-acceptance coefficients.
    pub fn coefficients(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let c1 = self.p_target * (self.c_miss_cm - self.c_miss_asv * self.p_miss_asv)
            - self.p_nontarget * self.c_fa_asv * self.p_fa_asv;
        let c2 = self.c_fa_cm * self.p_spoof * (1.0 - self.p_miss_spoof_asv);
        if c1 <= 0.0 || c2 <= 0.0 {
            return Err(Error::UndefinedMetric(format!(
                "cost coefficients C1={c1:.6}, C2={c2:.6} must both be positive"
            )));
        }
        Ok((c1, c2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdcfResult {
    /// Minimum normalized tandem cost over all thresholds.
    pub min_tdcf: f64,
    pub threshold: f64,
}

/// Minimum normalized tandem detection cost of a countermeasure given a
/// fixed verifier operating point. The normalizer is the better of the
/// two trivial countermeasures (accept everything, reject everything).
pub fn compute_min_tdcf(
    bona: &[f64],
    spoof: &[f64],
    cost: &TdcfCostModel,
) -> Result<TdcfResult> {
    check_scores("bona fide", bona)?;
    check_scores("spoof", spoof)?;
    let (c1, c2) = cost.coefficients()?;
    let norm = c1.min(c2);
    let nb = bona.len() as f64;
    let ns = spoof.len() as f64;

    let mut best = f64::INFINITY;
    let mut best_theta = f64::NEG_INFINITY;
    // Accept-everything sits below every finite candidate.
    let consider = |theta: f64, p_miss: f64, p_fa: f64, best: &mut f64, best_theta: &mut f64| {
        let cost_here = (c1 * p_miss + c2 * p_fa) / norm;
        if cost_here < *best {
            *best = cost_here;
            *best_theta = theta;
        }
    };
    consider(f64::NEG_INFINITY, 0.0, 1.0, &mut best, &mut best_theta);
    for &theta in &sweep_candidates(bona, spoof) {
        let (fr, fa) = error_counts(bona, spoof, theta);
        consider(theta, fr as f64 / nb, fa as f64 / ns, &mut best, &mut best_theta);
    }
    Ok(TdcfResult {
        min_tdcf: best,
        threshold: best_theta,
    })
}

/// Population mean and standard deviation of a reference score set.
pub fn score_stats(reference: &[f64]) -> Result<(f64, f64)> {
    check_scores("reference", reference)?;
    let n = reference.len() as f64;
    let mean = reference.iter().sum::<f64>() / n;
    let var = reference.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return Err(Error::DegenerateScores(format!(
            "reference scores have no spread (std {std:.3e})"
        )));
    }
    Ok((mean, std))
}

/// Z-normalize scores against a reference population.
pub fn normalize_scores(scores: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_scores("input", scores)?;
    let (mean, std) = score_stats(reference)?;
    Ok(scores.iter().map(|s| (s - mean) / std).collect())
}

/// Fuse score sets by weighted average after z-normalizing each system
/// against its reference population (typically that system's development
/// scores). With `references: None` each set normalizes against itself.
/// All sets must cover the same trials; output follows the first set's
/// trial order. `weights` defaults to equal. A single input passes
/// through verbatim: there is nothing to calibrate against.
pub fn fuse_scores(
    sets: &[ScoreSet],
    references: Option<&[ScoreSet]>,
    weights: Option<&[f64]>,
) -> Result<ScoreSet> {
    if sets.is_empty() {
        return Err(Error::Config("fusion needs at least one score set".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != sets.len() {
                return Err(Error::Contract(format!(
                    "{} weights for {} score sets",
                    w.len(),
                    sets.len()
                )));
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::Config("fusion weights must be positive".into()));
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        }
        None => vec![1.0 / sets.len() as f64; sets.len()],
    };
    if let Some(refs) = references {
        if refs.len() != sets.len() {
            return Err(Error::Contract(format!(
                "{} reference sets for {} score sets",
                refs.len(),
                sets.len()
            )));
        }
    }
    if sets.len() == 1 {
        return Ok(sets[0].clone());
    }

    let first = &sets[0];
    let first_ids: BTreeSet<&str> = first.entries.iter().map(|(id, _)| id.as_str()).collect();
    for (i, set) in sets.iter().enumerate().skip(1) {
        let ids: BTreeSet<&str> = set.entries.iter().map(|(id, _)| id.as_str()).collect();
        if ids != first_ids {
            let diff: Vec<&&str> = first_ids.symmetric_difference(&ids).take(5).collect();
            return Err(Error::Contract(format!(
                "score set {i} covers different trials (e.g. {})",
                diff.iter().map(|s| **s).collect::<Vec<_>>().join(", ")
            )));
        }
    }

    let mut fused: Vec<(String, f64)> = first
        .entries
        .iter()
        .map(|(id, _)| (id.clone(), 0.0))
        .collect();
    for (i, (set, weight)) in sets.iter().zip(&w).enumerate() {
        let raw: Vec<f64> = set.entries.iter().map(|(_, s)| *s).collect();
        let reference: Vec<f64> = match references {
            Some(refs) => refs[i].entries.iter().map(|(_, s)| *s).collect(),
            None => raw.clone(),
        };
        let normed = normalize_scores(&raw, &reference)?;
        for ((id, _), out) in set.entries.iter().zip(normed) {
            let slot = fused
                .iter_mut()
                .find(|(fid, _)| fid == id)
                .expect("id sets verified equal");
            slot.1 += weight * out;
        }
    }
    ScoreSet::new(fused)
}
