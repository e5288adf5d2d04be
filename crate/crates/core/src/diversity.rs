//! 0/1-loss error decomposition of a voting ensemble and the margin-based
//! risk estimator driven by per-instance diversity.
//!
//! For an ensemble with weights `c` (summing to one) and an instance `(x, y)`:
//!
//! - `margin(f, x) = f(x) y` for a member, `margin(f_ens, x) = sgn(sum c f(x)) y`
//!   for the ensemble (0 on a tie);
//! - `bar_margin(x) = sum_f c margin(f, x)`;
//! - `div(x) = margin(f_ens, x) / 2 - bar_margin(x) / 2`;
//! - `lambda(x)` is the sign of `div(x)`, and at `div(x) = 0` the ensemble
//!   margin itself, so that `bar_margin = lambda - 2 div` at every instance.
//!
//! Averaged over a sample this gives `G = A - D`: ensemble error equals the
//! weighted mean member error minus the mean diversity.
//!
//! The risk estimator treats `div(x*)` at the minimum-margin instance as the
//! free variable. With `m = lambda - 2 div` and `gamma = (1 - 2 eps) m`,
//! `R(div) = k log2(8 e |S| / k)` where `k = (8 delta / gamma)^2`.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::learners::PredictionMatrix;
use crate::{Error, Result};

/// Tolerance on `|G - (A - D)|` before a decomposition is declared broken.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub fn margin_individual(prediction: i8, label: i8) -> i8 {
    prediction * label
}

/// 0/1 loss with half credit for ties: 1 for margin -1, 0.5 for 0, 0 for +1.
pub fn err01(margin: i8) -> Result<f64> {
    match margin {
        -1 => Ok(1.0),
        0 => Ok(0.5),
        1 => Ok(0.0),
        other => Err(Error::Domain(format!("margin {other} is not -1, 0 or +1"))),
    }
}

fn check_weights(pm: &PredictionMatrix, weights: &[f64]) -> Result<()> {
    if weights.len() != pm.n_classifiers() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} classifiers",
            weights.len(),
            pm.n_classifiers()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "weights must be non-negative and sum to 1".into(),
        ));
    }
    Ok(())
}

/// Correct and incorrect weight mass at one instance, accumulated in
/// classifier order.
fn masses(pm: &PredictionMatrix, weights: &[f64], i: usize) -> (f64, f64) {
    let (mut right, mut wrong) = (0.0, 0.0);
    for (j, &w) in weights.iter().enumerate() {
        if pm.margin(j, i) > 0 {
            right += w;
        } else {
            wrong += w;
        }
    }
    (right, wrong)
}

/// Everything the diversity machinery needs about one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct InstanceStats {
    pub ensemble_margin: i8,
    pub bar_margin: f64,
    pub div: f64,
    pub lambda: i8,
}

pub(crate) fn instance_stats(pm: &PredictionMatrix, weights: &[f64], i: usize) -> InstanceStats {
    let (right, wrong) = masses(pm, weights, i);
    let ensemble_margin = match right.partial_cmp(&wrong) {
        Some(std::cmp::Ordering::Greater) => 1,
        Some(std::cmp::Ordering::Less) => -1,
        _ => 0,
    };
    // dividing by the total keeps unanimous instances at exactly +-1 when
    // the weights sum to 1 only up to rounding
    let bar_margin = (right - wrong) / (right + wrong);
    let div = 0.5 * f64::from(ensemble_margin) - 0.5 * bar_margin;
    InstanceStats {
        ensemble_margin,
        bar_margin,
        div,
        lambda: lambda_from(div, ensemble_margin),
    }
}

fn lambda_from(div: f64, ensemble_margin: i8) -> i8 {
    if div > 0.0 {
        1
    } else if div < 0.0 {
        -1
    } else {
        ensemble_margin
    }
}

/// Weighted mean member margin at instance `i`, in `[-1, 1]`.
pub fn bar_margin(pm: &PredictionMatrix, weights: &[f64], i: usize) -> Result<f64> {
    check_weights(pm, weights)?;
    Ok(instance_stats(pm, weights, i).bar_margin)
}

/// Ensemble margin `sgn(sum c f(x)) y` at instance `i`.
pub fn ensemble_margin(pm: &PredictionMatrix, weights: &[f64], i: usize) -> Result<i8> {
    check_weights(pm, weights)?;
    Ok(instance_stats(pm, weights, i).ensemble_margin)
}

/// Per-instance diversity `margin(f_ens, x)/2 - bar_margin(x)/2`.
pub fn div_instance(pm: &PredictionMatrix, weights: &[f64], i: usize) -> Result<f64> {
    check_weights(pm, weights)?;
    Ok(instance_stats(pm, weights, i).div)
}

/// Sign indicator linking diversity to the mean margin.
///
/// +1 for positive diversity, -1 for negative. At zero diversity the two
/// unanimous cases give `vote * label` (all right: +1, all wrong: -1) and a
/// tied vote gives 0.
pub fn lambda_of(div: f64, vote: i8, label: i8) -> i8 {
    lambda_from(div, vote * label)
}

/// Per-instance diversity, sign indicator and mean margin, plus the sample
/// averages `G`, `A` and `D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityProfile {
    pub per_instance_div: Vec<f64>,
    pub per_instance_lambda: Vec<i8>,
    pub per_instance_bar_margin: Vec<f64>,
    pub per_instance_vote_margin: Vec<i8>,
    /// Mean ensemble 0/1 error.
    pub g_bar: f64,
    /// Weighted mean member 0/1 error.
    pub a_bar: f64,
    /// Mean diversity.
    pub d_bar: f64,
    pub tie_count: usize,
}

pub fn decompose(pm: &PredictionMatrix, weights: &[f64]) -> Result<DiversityProfile> {
    check_weights(pm, weights)?;
    let n = pm.n_instances();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot decompose over zero instances".into(),
        ));
    }
    let stats: Vec<InstanceStats> = (0..n).map(|i| instance_stats(pm, weights, i)).collect();
    let nf = n as f64;

    let mut g_bar = 0.0;
    for s in &stats {
        g_bar += err01(s.ensemble_margin)?;
    }
    g_bar /= nf;

    let mut a_bar = 0.0;
    for (j, &c) in weights.iter().enumerate() {
        let wrong = (0..n).filter(|&i| pm.margin(j, i) < 0).count();
        a_bar += c * (wrong as f64 / nf);
    }

    let d_bar = stats.iter().map(|s| s.div).sum::<f64>() / nf;

    let gap = (g_bar - (a_bar - d_bar)).abs();
    if gap.is_nan() || gap > IDENTITY_TOLERANCE {
        return Err(Error::Consistency(format!(
            "G = {g_bar}, A - D = {} (gap {gap:e})",
            a_bar - d_bar
        )));
    }
    Ok(DiversityProfile {
        per_instance_div: stats.iter().map(|s| s.div).collect(),
        per_instance_lambda: stats.iter().map(|s| s.lambda).collect(),
        per_instance_bar_margin: stats.iter().map(|s| s.bar_margin).collect(),
        per_instance_vote_margin: stats.iter().map(|s| s.ensemble_margin).collect(),
        g_bar,
        a_bar,
        d_bar,
        tie_count: stats.iter().filter(|s| s.ensemble_margin == 0).count(),
    })
}

/// Parameters of the margin bound: feature-map radius `delta`, label-noise
/// rate `epsilon`, sample size `|S|` and confidence `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub delta: f64,
    pub epsilon: f64,
    pub sample_size: usize,
    pub confidence: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            epsilon: 0.01,
            sample_size: 200,
            confidence: 0.05,
        }
    }
}

impl RiskParams {
    pub fn new(delta: f64, epsilon: f64, sample_size: usize, confidence: f64) -> Result<Self> {
        let p = Self {
            delta,
            epsilon,
            sample_size,
            confidence,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if self.sample_size == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be at least 1".into(),
            ));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in (0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    fn noise_factor(&self) -> f64 {
        1.0 - 2.0 * self.epsilon
    }

    fn samples(&self) -> f64 {
        self.sample_size as f64
    }
}

/// Minimum noise-adjusted margin over the sample and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaResult {
    pub gamma: f64,
    pub argmin_index: usize,
    pub div_at_argmin: f64,
    pub lambda_at_argmin: i8,
    /// Tied instances skipped by the search.
    pub ties_excluded: usize,
}

/// `gamma = min_i (1 - 2 eps)(lambda_i - 2 div_i)` over instances whose vote
/// is not tied; ties in the minimum go to the lowest index.
pub fn gamma_margin(
    pm: &PredictionMatrix,
    weights: &[f64],
    params: &RiskParams,
) -> Result<GammaResult> {
    check_weights(pm, weights)?;
    params.validate()?;
    let scale = params.noise_factor();
    let mut best: Option<(f64, usize, InstanceStats)> = None;
    let mut ties = 0;
    for i in 0..pm.n_instances() {
        let s = instance_stats(pm, weights, i);
        if s.ensemble_margin == 0 {
            ties += 1;
            continue;
        }
        let value = scale * (f64::from(s.lambda) - 2.0 * s.div);
        if best.is_none_or(|(b, ..)| value < b) {
            best = Some((value, i, s));
        }
    }
    let (gamma, argmin_index, s) = best.ok_or_else(|| {
        Error::Domain("every instance is a tied vote; the ensemble margin is undefined".into())
    })?;
    Ok(GammaResult {
        gamma,
        argmin_index,
        div_at_argmin: s.div,
        lambda_at_argmin: s.lambda,
        ties_excluded: ties,
    })
}

/// `ceil((8 delta / gamma)^2)`; needs a positive margin.
pub fn kappa_of(gamma: f64, delta: f64) -> Result<u64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Domain(format!(
            "margin {gamma} is not positive; the bound needs a positive margin"
        )));
    }
    let k = ((8.0 * delta / gamma).powi(2)).ceil();
    if !k.is_finite() || k > u64::MAX as f64 {
        return Err(Error::Domain(format!("kappa overflows for margin {gamma}")));
    }
    Ok(k as u64)
}

/// Smallest margin for which the bound applies: `sqrt(32 delta^2 / |S|)`.
pub fn margin_threshold(params: &RiskParams) -> f64 {
    (32.0 * params.delta * params.delta / params.samples()).sqrt()
}

/// Full PAC bound on the true risk of a consistent ensemble with margin
/// `gamma`:
/// `(2/|S|) (k log2(8e|S|/k) log2(32|S|) + log2(2|S|/xi))` with the ceiled `k`.
pub fn risk_bound(gamma: f64, params: &RiskParams) -> Result<f64> {
    params.validate()?;
    let threshold = margin_threshold(params);
    if gamma.is_nan() || gamma <= threshold {
        return Err(Error::Domain(format!(
            "margin {gamma} does not exceed the threshold sqrt(32 delta^2/|S|) = {threshold}"
        )));
    }
    let k = kappa_of(gamma, params.delta)? as f64;
    let s = params.samples();
    let e = std::f64::consts::E;
    Ok(2.0 / s
        * (k * (8.0 * e * s / k).log2() * (32.0 * s).log2() + (2.0 * s / params.confidence).log2()))
}

fn shifted_margin(div: f64, lambda: i8) -> Result<f64> {
    if lambda != 1 && lambda != -1 {
        return Err(Error::Domain(format!(
            "lambda must be -1 or +1 for the risk estimator, got {lambda}"
        )));
    }
    let m = f64::from(lambda) - 2.0 * div;
    if m == 0.0 || !m.is_finite() {
        return Err(Error::Domain(format!(
            "zero margin at div = {div}, lambda = {lambda}: the estimator is singular"
        )));
    }
    Ok(m)
}

/// `A = (8 delta / (1 - 2 eps))^2` and `L = ln(8|S| ((1 - 2 eps) m / (8 delta))^2)`.
fn coefficients(m: f64, params: &RiskParams) -> (f64, f64) {
    let a = (8.0 * params.delta / params.noise_factor()).powi(2);
    let l = (8.0 * params.samples() * m * m / a).ln();
    (a, l)
}

/// Smooth estimated risk `k log2(8 e |S| / k)` with `k = (8 delta / gamma)^2`
/// left unceiled, as a function of the diversity at the minimum-margin
/// instance.
pub fn estimated_risk(div: f64, lambda: i8, params: &RiskParams) -> Result<f64> {
    params.validate()?;
    let m = shifted_margin(div, lambda)?;
    let gamma = params.noise_factor() * m;
    let k = (8.0 * params.delta / gamma).powi(2);
    Ok(k * (8.0 * std::f64::consts::E * params.samples() / k).log2())
}

/// `dR/d div = 4 A / m^3 * log2(8|S| ((1 - 2 eps) m / (8 delta))^2)`.
pub fn risk_first_derivative(div: f64, lambda: i8, params: &RiskParams) -> Result<f64> {
    params.validate()?;
    let m = shifted_margin(div, lambda)?;
    let (a, l) = coefficients(m, params);
    Ok(4.0 * a / m.powi(3) * l / std::f64::consts::LN_2)
}

/// `d2R/d div2 = 8 A / (ln 2 m^4) * (3 L - 2)`.
pub fn risk_second_derivative(div: f64, lambda: i8, params: &RiskParams) -> Result<f64> {
    params.validate()?;
    let m = shifted_margin(div, lambda)?;
    let (a, l) = coefficients(m, params);
    Ok(8.0 * a / (std::f64::consts::LN_2 * m.powi(4)) * (3.0 * l - 2.0))
}

/// `d3R/d div3 = 8 A / (ln 2 m^5) * (24 L - 28)`.
pub fn risk_third_derivative(div: f64, lambda: i8, params: &RiskParams) -> Result<f64> {
    params.validate()?;
    let m = shifted_margin(div, lambda)?;
    let (a, l) = coefficients(m, params);
    Ok(8.0 * a / (std::f64::consts::LN_2 * m.powi(5)) * (24.0 * l - 28.0))
}

/// Endpoints of the monotonicity and curvature intervals of the estimated
/// risk on the positive diversity axis (the negative axis mirrors them).
///
/// `q1 = eps` and `q3 = (1 - eps/(1 - 2 eps))/2` bound the domain; `q2 = q4`
/// zeroes the first derivative, `q5` the second and `q6` the third.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q6: f64,
    #[serde(rename = "implied_ok")]
    pub implied_condition_ok: bool,
}

pub fn critical_points(params: &RiskParams) -> Result<CriticalPoints> {
    params.validate()?;
    let eps = params.epsilon;
    let r = params.delta / params.noise_factor();
    let base = 8.0 / params.samples();
    let at = |scale: f64| 0.5 * (1.0 - r * (base * scale).sqrt());
    let q2 = at(1.0);
    let spread = r * base.sqrt();
    Ok(CriticalPoints {
        q1: eps,
        q2,
        q3: 0.5 * (1.0 - eps / params.noise_factor()),
        q4: q2,
        q5: at((2.0f64 / 3.0).exp()),
        q6: at((7.0f64 / 6.0).exp()),
        implied_condition_ok: eps <= spread && spread <= params.noise_factor(),
    })
}

impl CriticalPoints {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"q1\": {:.6}, \"q2\": {:.6}, \"q3\": {:.6}, \"q4\": {:.6}, \"q5\": {:.6}, \"q6\": {:.6}, \"implied_ok\": {}}}",
            self.q1, self.q2, self.q3, self.q4, self.q5, self.q6, self.implied_condition_ok
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Interval {
    NegQ3Q2,
    NegQ2Q5,
    NegQ5Q6,
    NegQ6Q1,
    Q1Q6,
    Q6Q5,
    Q5Q2,
    Q2Q3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
}

/// Curvature wording of the monotone-interval table. The table calls a
/// stretch "convex" where the curve bends downwards (negative second
/// derivative) and "concave" where it bends upwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Convex,
    Concave,
}

impl Shape {
    /// Sign of the second derivative that the label stands for.
    pub fn curvature_sign(self) -> f64 {
        match self {
            Shape::Convex => -1.0,
            Shape::Concave => 1.0,
        }
    }
}

/// Whether successive increments grow ("larger") or shrink ("smaller").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Smaller,
    Larger,
}

/// One row of the monotone-interval table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Annotation {
    pub risk_trend: Trend,
    pub risk_shape: Shape,
    pub slope_trend: Trend,
    pub slope_shape: Shape,
    pub risk_change: Change,
    pub slope_change: Change,
}

impl Interval {
    pub const ALL: [Interval; 8] = [
        Interval::NegQ3Q2,
        Interval::NegQ2Q5,
        Interval::NegQ5Q6,
        Interval::NegQ6Q1,
        Interval::Q1Q6,
        Interval::Q6Q5,
        Interval::Q5Q2,
        Interval::Q2Q3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Interval::NegQ3Q2 => "(-q3,-q2)",
            Interval::NegQ2Q5 => "(-q2,-q5)",
            Interval::NegQ5Q6 => "(-q5,-q6)",
            Interval::NegQ6Q1 => "(-q6,-q1)",
            Interval::Q1Q6 => "(q1,q6)",
            Interval::Q6Q5 => "(q6,q5)",
            Interval::Q5Q2 => "(q5,q2)",
            Interval::Q2Q3 => "(q2,q3)",
        }
    }

    /// Numeric bounds of the interval.
    pub fn bounds(self, cp: &CriticalPoints) -> (f64, f64) {
        match self {
            Interval::NegQ3Q2 => (-cp.q3, -cp.q2),
            Interval::NegQ2Q5 => (-cp.q2, -cp.q5),
            Interval::NegQ5Q6 => (-cp.q5, -cp.q6),
            Interval::NegQ6Q1 => (-cp.q6, -cp.q1),
            Interval::Q1Q6 => (cp.q1, cp.q6),
            Interval::Q6Q5 => (cp.q6, cp.q5),
            Interval::Q5Q2 => (cp.q5, cp.q2),
            Interval::Q2Q3 => (cp.q2, cp.q3),
        }
    }

    pub fn annotation(self) -> Annotation {
        use Change::*;
        use Shape::*;
        use Trend::*;
        let row = |rt, rs, st, ss, rc, sc| Annotation {
            risk_trend: rt,
            risk_shape: rs,
            slope_trend: st,
            slope_shape: ss,
            risk_change: rc,
            slope_change: sc,
        };
        match self {
            Interval::NegQ3Q2 => row(Increasing, Convex, Decreasing, Concave, Smaller, Larger),
            Interval::NegQ2Q5 => row(Decreasing, Convex, Decreasing, Concave, Smaller, Larger),
            Interval::NegQ5Q6 => row(Decreasing, Concave, Increasing, Concave, Larger, Larger),
            Interval::NegQ6Q1 => row(Decreasing, Concave, Increasing, Convex, Larger, Smaller),
            Interval::Q1Q6 => row(Increasing, Concave, Increasing, Concave, Larger, Larger),
            Interval::Q6Q5 => row(Increasing, Concave, Increasing, Convex, Larger, Smaller),
            Interval::Q5Q2 => row(Increasing, Convex, Decreasing, Convex, Smaller, Smaller),
            Interval::Q2Q3 => row(Decreasing, Convex, Decreasing, Convex, Smaller, Smaller),
        }
    }

    /// The two stretches where raising diversity lowers the estimated risk
    /// with an accelerating payoff.
    pub fn diversity_helps(self) -> bool {
        matches!(self, Interval::NegQ5Q6 | Interval::NegQ6Q1)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Locates `div` among the eight intervals of `(-q3, -q1) U (q1, q3)`.
/// Interior endpoints belong to the interval on their right.
pub fn classify_interval(div: f64, cp: &CriticalPoints) -> Result<Interval> {
    if !cp.implied_condition_ok {
        return Err(Error::Domain(
            "critical points violate the implied ordering condition".into(),
        ));
    }
    let a = div.abs();
    if a.is_nan() || a <= cp.q1 {
        return Err(Error::Domain(format!(
            "div = {div} lies in the gap [-q1, q1] = [{:.6}, {:.6}] outside the table's domain",
            -cp.q1, cp.q1
        )));
    }
    if a.is_nan() || a >= cp.q3 {
        return Err(Error::Domain(format!(
            "div = {div} lies beyond +/-q3 = {:.6}, outside the table's domain",
            cp.q3
        )));
    }
    Ok(if div > 0.0 {
        if a < cp.q6 {
            Interval::Q1Q6
        } else if a < cp.q5 {
            Interval::Q6Q5
        } else if a < cp.q2 {
            Interval::Q5Q2
        } else {
            Interval::Q2Q3
        }
    } else if a <= cp.q6 {
        Interval::NegQ6Q1
    } else if a <= cp.q5 {
        Interval::NegQ5Q6
    } else if a <= cp.q2 {
        Interval::NegQ2Q5
    } else {
        Interval::NegQ3Q2
    })
}

/// One evaluated grid point. Values are `None` at the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub div: f64,
    pub lambda: i8,
    pub risk: Option<f64>,
    pub risk_d1: Option<f64>,
    pub risk_d2: Option<f64>,
    pub interval: Option<Interval>,
}

impl SweepRow {
    pub fn is_singular(&self) -> bool {
        self.risk.is_none()
    }
}

/// Evaluates the estimator and its first two derivatives on `grid`.
/// With `lambda = None` each point uses the sign of its own diversity
/// (+1 at zero).
pub fn sweep_curve(params: &RiskParams, grid: &[f64], lambda: Option<i8>) -> Result<Vec<SweepRow>> {
    params.validate()?;
    if let Some(l) = lambda {
        if l != 1 && l != -1 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be -1 or +1, got {l}"
            )));
        }
    }
    let cp = critical_points(params)?;
    Ok(grid
        .iter()
        .map(|&div| {
            let lam = lambda.unwrap_or(if div < 0.0 { -1 } else { 1 });
            let risk = estimated_risk(div, lam, params).ok();
            SweepRow {
                div,
                lambda: lam,
                risk,
                risk_d1: risk.and_then(|_| risk_first_derivative(div, lam, params).ok()),
                risk_d2: risk.and_then(|_| risk_second_derivative(div, lam, params).ok()),
                // the table assumes lambda carries the sign of div
                interval: if f64::from(lam) * div > 0.0 {
                    classify_interval(div, &cp).ok()
                } else {
                    None
                },
            }
        })
        .collect())
}

/// CSV with header `div,lambda,risk,risk_d1,risk_d2,interval` and six-decimal
/// numbers. Singular rows leave the value cells empty and use the interval
/// tag `singular`; points outside the table's domain use `outside`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "div,lambda,risk,risk_d1,risk_d2,interval")?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        let tag = if r.is_singular() {
            "singular"
        } else {
            r.interval.map_or("outside", Interval::label)
        };
        writeln!(
            out,
            "{:.6},{},{},{},{},{}",
            r.div,
            r.lambda,
            cell(r.risk),
            cell(r.risk_d1),
            cell(r.risk_d2),
            tag
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
