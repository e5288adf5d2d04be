//! Ensemble pruning: the diversity-guided greedy selector (EPBD) and the
//! ranking-based baselines ES, KP, KL, OO and DREP.
//!
//! Every pruner works on the prediction matrix of the full ensemble over a
//! pruning set and returns indices into the original member list. The pruned
//! sub-ensemble votes with uniform weights; `none` keeps the ensemble as is.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::diversity::instance_stats;
use crate::learners::{Ensemble, PredictionMatrix};
use crate::{Error, Result};

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum PruneMethod {
    None,
    Epbd,
    Es,
    Kl,
    Kp,
    Oo,
    Drep,
}

impl PruneMethod {
    pub const ALL: [PruneMethod; 7] = [
        PruneMethod::None,
        PruneMethod::Epbd,
        PruneMethod::Es,
        PruneMethod::Kl,
        PruneMethod::Kp,
        PruneMethod::Oo,
        PruneMethod::Drep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PruneMethod::None => "none",
            PruneMethod::Epbd => "epbd",
            PruneMethod::Es => "es",
            PruneMethod::Kl => "kl",
            PruneMethod::Kp => "kp",
            PruneMethod::Oo => "oo",
            PruneMethod::Drep => "drep",
        }
    }
}

impl fmt::Display for PruneMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub method: PruneMethod,
    /// Kept fraction; the sub-ensemble has at most `ceil(alpha |F|)` members.
    pub alpha: f64,
    /// Weight of the diversity term in EPBD's candidate score.
    pub beta: f64,
    /// Fraction of the remaining pool DREP considers each round.
    pub rho: f64,
    /// Label-noise rate used by EPBD's margin search.
    pub epsilon: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_RHO: f64 = 0.3;
pub const DEFAULT_EPSILON: f64 = 0.01;

impl PruneConfig {
    pub fn new(method: PruneMethod) -> Self {
        Self {
            method,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} is outside (0, 1]",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta {} must be a non-negative number",
                self.beta
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho {} is outside (0, 1)",
                self.rho
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "epsilon {} is outside [0, 0.5)",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `ceil(alpha * pool)`, at least 1. The small slack keeps products such
    /// as `0.6 * 10` from rounding up to 7.
    pub fn cap(&self, pool: usize) -> usize {
        let c = (self.alpha * pool as f64 - 1e-9).ceil();
        (c.max(1.0) as usize).min(pool.max(1))
    }
}

/// One selection step. `instance` is the minimum-margin instance for EPBD
/// and absent for the other methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    pub instance: Option<usize>,
    pub classifier: usize,
    pub score: f64,
}

/// Which members a pruner kept, in selection order, and how it got there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub kept: Vec<usize>,
    pub trace: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Selection {
    fn new() -> Self {
        Self {
            kept: Vec::new(),
            trace: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, classifier: usize, instance: Option<usize>, score: f64) {
        self.trace.push(TraceStep {
            iter: self.kept.len(),
            instance,
            classifier,
            score,
        });
        self.kept.push(classifier);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneResult {
    pub method: PruneMethod,
    pub alpha: f64,
    pub beta: f64,
    pub kept: Vec<usize>,
    pub trace: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub sub_ensemble: Ensemble,
}

impl PruneResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("prune result serialises");
        s.push('\n');
        s
    }
}

/// Prune `e` using `d` as the pruning set.
pub fn prune(e: &Ensemble, d: &Dataset, cfg: &PruneConfig) -> Result<PruneResult> {
    if d.is_empty() {
        return Err(Error::InvalidArgument("pruning set is empty".into()));
    }
    let pm = PredictionMatrix::from_ensemble(e, d);
    let sel = select(&pm, cfg)?;
    let sub_ensemble = if cfg.method == PruneMethod::None {
        e.clone()
    } else {
        e.select(&sel.kept)?
    };
    Ok(PruneResult {
        method: cfg.method,
        alpha: cfg.alpha,
        beta: cfg.beta,
        kept: sel.kept,
        trace: sel.trace,
        notes: sel.notes,
        sub_ensemble,
    })
}

/// Run the configured pruner directly on a prediction matrix.
pub fn select(pm: &PredictionMatrix, cfg: &PruneConfig) -> Result<Selection> {
    cfg.validate()?;
    if pm.n_classifiers() == 0 {
        return Err(Error::InvalidArgument("cannot prune an empty pool".into()));
    }
    if pm.n_instances() == 0 {
        return Err(Error::InvalidArgument("pruning set is empty".into()));
    }
    match cfg.method {
        PruneMethod::None => Ok(select_none(pm)),
        PruneMethod::Epbd => select_epbd(pm, cfg),
        PruneMethod::Es => Ok(select_es(pm, cfg)),
        PruneMethod::Kp => Ok(select_kp(pm, cfg)),
        PruneMethod::Kl => Ok(select_kl(pm, cfg)),
        PruneMethod::Oo => Ok(select_oo(pm, cfg)),
        PruneMethod::Drep => Ok(select_drep(pm, cfg)),
    }
}

fn select_none(pm: &PredictionMatrix) -> Selection {
    let mut sel = Selection::new();
    for j in 0..pm.n_classifiers() {
        sel.push(j, None, pm.member_accuracy(j));
    }
    sel
}

fn select_es(pm: &PredictionMatrix, cfg: &PruneConfig) -> Selection {
    let mut sel = Selection::new();
    for j in 0..cfg.cap(pm.n_classifiers()) {
        sel.push(j, None, pm.member_accuracy(j));
    }
    sel
}

/// Diversity at instance `i` of the uniformly weighted vote of `members`.
pub fn div_with(pm: &PredictionMatrix, members: &[usize], i: usize) -> f64 {
    let right = members.iter().filter(|&&j| pm.margin(j, i) > 0).count();
    div_from_counts(right, members.len())
}

/// Mean diversity over all instances of the uniform vote of `members`.
pub fn mean_div_with(pm: &PredictionMatrix, members: &[usize]) -> f64 {
    let n = pm.n_instances();
    (0..n).map(|i| div_with(pm, members, i)).sum::<f64>() / n as f64
}

fn div_from_counts(right: usize, total: usize) -> f64 {
    let wrong = total - right;
    let vote = match right.cmp(&wrong) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    };
    0.5 * vote - 0.5 * (right as f64 - wrong as f64) / total as f64
}

/// The minimum-margin instance of the uniform vote over `in_pool`, among
/// instances that are not tied and that some pool member gets right. Ties
/// in the margin go to the lowest index.
pub fn epbd_target(pm: &PredictionMatrix, in_pool: &[bool], epsilon: f64) -> Option<usize> {
    let pool = in_pool.iter().filter(|&&p| p).count();
    if pool == 0 {
        return None;
    }
    let c = 1.0 / pool as f64;
    let weights: Vec<f64> = in_pool.iter().map(|&p| if p { c } else { 0.0 }).collect();
    let scale = 1.0 - 2.0 * epsilon;
    let mut best: Option<(f64, usize)> = None;
    for i in 0..pm.n_instances() {
        let reachable = (0..pm.n_classifiers()).any(|j| in_pool[j] && pm.margin(j, i) > 0);
        let s = instance_stats(pm, &weights, i);
        if !reachable || s.ensemble_margin == 0 {
            continue;
        }
        let value = scale * (f64::from(s.lambda) - 2.0 * s.div);
        if best.is_none_or(|(b, _)| value < b) {
            best = Some((value, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Greedy EPBD. Each round targets the minimum-margin instance of the
/// remaining pool and, among pool members right on it, adds the one
/// maximising `accuracy + beta * mean_div(kept + candidate)`.
fn select_epbd(pm: &PredictionMatrix, cfg: &PruneConfig) -> Result<Selection> {
    let n = pm.n_classifiers();
    let cap = cfg.cap(n);
    let accuracy: Vec<f64> = (0..n).map(|j| pm.member_accuracy(j)).collect();
    let mut in_pool = vec![true; n];
    let mut sel = Selection::new();

    while sel.kept.len() < cap {
        let Some(x_star) = epbd_target(pm, &in_pool, cfg.epsilon) else {
            sel.notes.push(format!(
                "iteration {}: no untied instance is classified correctly by a remaining member",
                sel.kept.len()
            ));
            break;
        };
        // correct votes per instance among the members kept so far
        let right: Vec<usize> = (0..pm.n_instances())
            .map(|i| sel.kept.iter().filter(|&&k| pm.margin(k, i) > 0).count())
            .collect();
        let size = sel.kept.len() + 1;
        let mut best: Option<(f64, usize)> = None;
        for j in (0..n).filter(|&j| in_pool[j] && pm.margin(j, x_star) > 0) {
            let div: f64 = right
                .iter()
                .enumerate()
                .map(|(i, &r)| div_from_counts(r + usize::from(pm.margin(j, i) > 0), size))
                .sum::<f64>()
                / pm.n_instances() as f64;
            let score = accuracy[j] + cfg.beta * div;
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, j));
            }
        }
        let (score, j) = best.expect("target instance has a correct member");
        in_pool[j] = false;
        sel.push(j, Some(x_star), score);
    }

    if sel.kept.is_empty() {
        return Err(Error::NoSelection(
            sel.notes
                .last()
                .cloned()
                .unwrap_or_else(|| "no candidate".into()),
        ));
    }
    Ok(sel)
}

/// Cohen's kappa between two prediction vectors. An undefined denominator
/// (both constant and equal) counts as full agreement.
pub fn pairwise_kappa(a: &[i8], b: &[i8]) -> f64 {
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|&&v| v > 0).count() as f64 / n;
    let pb = b.iter().filter(|&&v| v > 0).count() as f64 / n;
    let chance = pa * pb + (1.0 - pa) * (1.0 - pb);
    let denom = 1.0 - chance;
    if denom.abs() < 1e-12 {
        1.0
    } else {
        (agree - chance) / denom
    }
}

/// Symmetric KL divergence between the add-one smoothed output
/// distributions of two members.
pub fn symmetric_kl(a: &[i8], b: &[i8]) -> f64 {
    let smooth =
        |v: &[i8]| (v.iter().filter(|&&x| x > 0).count() as f64 + 1.0) / (v.len() as f64 + 2.0);
    let (p, q) = (smooth(a), smooth(b));
    (p - q) * (p / q).ln() + (q - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// Shared greedy scheme for KP and KL: seed with the best pair under
/// `pair`, then add the member whose aggregate against the kept set is best.
/// `better(a, b)` says whether score `a` beats `b`; ties keep the lower index.
fn greedy_pairwise(
    pm: &PredictionMatrix,
    cap: usize,
    pair: impl Fn(usize, usize) -> f64,
    better: impl Fn(f64, f64) -> bool,
    mean: bool,
) -> Selection {
    let n = pm.n_classifiers();
    let mut sel = Selection::new();
    if n == 1 {
        sel.push(0, None, 0.0);
        return sel;
    }
    let mut table = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = pair(a, b);
            table[a * n + b] = v;
            table[b * n + a] = v;
        }
    }
    let mut seed: Option<(f64, usize, usize)> = None;
    for a in 0..n {
        for b in a + 1..n {
            let v = table[a * n + b];
            if seed.is_none_or(|(s, ..)| better(v, s)) {
                seed = Some((v, a, b));
            }
        }
    }
    let (v, a, b) = seed.expect("at least one pair");
    sel.push(a, None, v);
    if cap >= 2 {
        sel.push(b, None, v);
    }
    let mut used = vec![false; n];
    used[a] = true;
    used[b] = cap >= 2;
    while sel.kept.len() < cap {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..n).filter(|&j| !used[j]) {
            let total: f64 = sel.kept.iter().map(|&k| table[j * n + k]).sum();
            let score = if mean {
                total / sel.kept.len() as f64
            } else {
                total
            };
            if best.is_none_or(|(s, _)| better(score, s)) {
                best = Some((score, j));
            }
        }
        let (score, j) = best.expect("cap never exceeds the pool");
        used[j] = true;
        sel.push(j, None, score);
    }
    sel
}

fn select_kp(pm: &PredictionMatrix, cfg: &PruneConfig) -> Selection {
    greedy_pairwise(
        pm,
        cfg.cap(pm.n_classifiers()),
        |a, b| pairwise_kappa(pm.row(a), pm.row(b)),
        |x, y| x < y,
        true,
    )
}

fn select_kl(pm: &PredictionMatrix, cfg: &PruneConfig) -> Selection {
    greedy_pairwise(
        pm,
        cfg.cap(pm.n_classifiers()),
        |a, b| symmetric_kl(pm.row(a), pm.row(b)),
        |x, y| x > y,
        false,
    )
}

/// Reference direction for orientation ordering: the all-ones vector with
/// its component along the mean signature removed.
pub fn orientation_reference(pm: &PredictionMatrix) -> Vec<f64> {
    let (k, n) = (pm.n_classifiers(), pm.n_instances());
    let mean: Vec<f64> = (0..n)
        .map(|i| (0..k).map(|j| f64::from(pm.margin(j, i))).sum::<f64>() / k as f64)
        .collect();
    let norm2: f64 = mean.iter().map(|v| v * v).sum();
    if norm2 < 1e-24 {
        return vec![1.0; n];
    }
    let proj = mean.iter().sum::<f64>() / norm2;
    mean.iter().map(|v| 1.0 - proj * v).collect()
}

fn select_oo(pm: &PredictionMatrix, cfg: &PruneConfig) -> Selection {
    let (k, n) = (pm.n_classifiers(), pm.n_instances());
    let cap = cfg.cap(k);
    let reference = orientation_reference(pm);
    let ref_norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let fallback = |note: &str| {
        let mut sel = select_es(pm, cfg);
        sel.notes.push(note.into());
        sel
    };
    if ref_norm < 1e-9 {
        return fallback("reference direction vanishes; kept members in training order");
    }
    let sig_norm = (n as f64).sqrt();
    let mut cosines: Vec<(f64, usize)> = (0..k)
        .map(|j| {
            let dot: f64 = (0..n)
                .map(|i| f64::from(pm.margin(j, i)) * reference[i])
                .sum();
            (dot / (sig_norm * ref_norm), j)
        })
        .collect();
    // increasing angle is decreasing cosine
    cosines.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let acute = cosines.iter().filter(|(c, _)| *c > 1e-12).count();
    if acute == 0 {
        return fallback(
            "no member is within a right angle of the reference; kept members in training order",
        );
    }
    let mut sel = Selection::new();
    for &(c, j) in cosines.iter().take(cap) {
        sel.push(j, None, c.clamp(-1.0, 1.0).acos());
    }
    if acute < cap {
        sel.notes.push(format!(
            "{} of {cap} kept members are at a right or obtuse angle",
            cap - acute
        ));
    }
    sel
}

/// 0/1 error, ties counting half, of the uniform vote of `members`.
fn vote_error(pm: &PredictionMatrix, members: &[usize]) -> f64 {
    let n = pm.n_instances();
    let mut err = 0.0;
    for i in 0..n {
        let s: i32 = members.iter().map(|&j| i32::from(pm.margin(j, i))).sum();
        err += match s.signum() {
            -1 => 1.0,
            0 => 0.5,
            _ => 0.0,
        };
    }
    err / n as f64
}

fn select_drep(pm: &PredictionMatrix, cfg: &PruneConfig) -> Selection {
    let (k, n) = (pm.n_classifiers(), pm.n_instances());
    let cap = cfg.cap(k);
    let mut sel = Selection::new();
    let first = (0..k)
        .map(|j| (vote_error(pm, &[j]), j))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("non-empty pool");
    sel.push(first.1, None, first.0);
    let mut current = first.0;
    let mut used = vec![false; k];
    used[first.1] = true;

    while sel.kept.len() < cap {
        let votes: Vec<i32> = (0..n)
            .map(|i| {
                sel.kept
                    .iter()
                    .map(|&j| i32::from(pm.get(j, i)))
                    .sum::<i32>()
                    .signum()
            })
            .collect();
        let mut remaining: Vec<(f64, usize)> = (0..k)
            .filter(|&j| !used[j])
            .map(|j| {
                let agree: i32 = (0..n).map(|i| i32::from(pm.get(j, i)) * votes[i]).sum();
                (f64::from(agree) / n as f64, j)
            })
            .collect();
        remaining.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = ((cfg.rho * remaining.len() as f64).ceil() as usize).max(1);
        let mut best: Option<(f64, usize)> = None;
        let mut trial = sel.kept.clone();
        trial.push(usize::MAX);
        for &(_, j) in remaining.iter().take(take) {
            *trial.last_mut().expect("non-empty") = j;
            let e = vote_error(pm, &trial);
            if best.is_none_or(|(b, bj)| e < b || (e == b && j < bj)) {
                best = Some((e, j));
            }
        }
        let (e, j) = best.expect("at least one candidate");
        if e >= current {
            sel.notes.push(format!(
                "stopped at {} members: error no longer improves",
                sel.kept.len()
            ));
            break;
        }
        current = e;
        used[j] = true;
        sel.push(j, None, e);
    }
    sel
}
