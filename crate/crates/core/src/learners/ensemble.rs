use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, Learner, LearnerSpec};
use crate::data::{bootstrap_sample, Dataset};
use crate::seed;
use crate::{Error, Result};

/// Trained members combined by weighted plurality voting. Weights are
/// non-negative and normalised to sum to one on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Classifier>,
    weights: Vec<f64>,
}

impl Ensemble {
    pub fn new(members: Vec<Classifier>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument(
                "an ensemble needs at least one member".into(),
            ));
        }
        if members.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "ensemble weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidArgument(
                "ensemble weights sum to zero".into(),
            ));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { members, weights })
    }

    /// Every member weighted `1/len`.
    pub fn uniform(members: Vec<Classifier>) -> Result<Self> {
        let n = members.len();
        Self::new(members, vec![1.0; n])
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Uniformly weighted sub-ensemble of the members at `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Ensemble> {
        Ensemble::uniform(indices.iter().map(|&j| self.members[j].clone()).collect())
    }

    /// `sgn(sum_j c_j f_j(x))`, with 0 for an exact tie.
    pub fn vote(&self, x: &[f64]) -> i8 {
        weighted_sign(self.members.iter().map(|m| m.predict(x)), &self.weights)
    }

    pub fn predictions(&self, d: &Dataset) -> PredictionMatrix {
        PredictionMatrix::from_ensemble(self, d)
    }
}

/// Sign of a weighted vote. The positive and negative masses are accumulated
/// separately in member order, so equal counts under equal weights compare
/// exactly equal and yield a tie.
pub(crate) fn weighted_sign(preds: impl Iterator<Item = i8>, weights: &[f64]) -> i8 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for (p, &w) in preds.zip(weights) {
        if p > 0 {
            pos += w;
        } else {
            neg += w;
        }
    }
    match pos.partial_cmp(&neg) {
        Some(std::cmp::Ordering::Greater) => 1,
        Some(std::cmp::Ordering::Less) => -1,
        _ => 0,
    }
}

/// Cached member predictions: entry `(j, i)` is `f_j(x_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMatrix {
    n_classifiers: usize,
    n_instances: usize,
    values: Vec<i8>,
    labels: Vec<i8>,
}

impl PredictionMatrix {
    pub fn from_ensemble(e: &Ensemble, d: &Dataset) -> Self {
        let values = e
            .members()
            .iter()
            .flat_map(|m| (0..d.len()).map(move |i| m.predict(d.row(i))))
            .collect();
        Self {
            n_classifiers: e.len(),
            n_instances: d.len(),
            values,
            labels: d.labels().to_vec(),
        }
    }

    /// Builds a matrix from explicit rows (one per classifier).
    pub fn from_rows(rows: Vec<Vec<i8>>, labels: Vec<i8>) -> Result<Self> {
        let n = labels.len();
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "prediction matrix needs at least one classifier".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "prediction rows must match the label count".into(),
            ));
        }
        if rows
            .iter()
            .flatten()
            .chain(&labels)
            .any(|&v| v != 1 && v != -1)
        {
            return Err(Error::InvalidArgument(
                "predictions and labels must be -1 or +1".into(),
            ));
        }
        Ok(Self {
            n_classifiers: rows.len(),
            n_instances: n,
            values: rows.into_iter().flatten().collect(),
            labels,
        })
    }

    pub fn n_classifiers(&self) -> usize {
        self.n_classifiers
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn get(&self, classifier: usize, instance: usize) -> i8 {
        self.values[classifier * self.n_instances + instance]
    }

    pub fn row(&self, classifier: usize) -> &[i8] {
        &self.values[classifier * self.n_instances..(classifier + 1) * self.n_instances]
    }

    /// `f_j(x_i) * y_i`.
    pub fn margin(&self, classifier: usize, instance: usize) -> i8 {
        self.get(classifier, instance) * self.labels[instance]
    }

    /// Fraction of instances member `j` gets right.
    pub fn member_accuracy(&self, classifier: usize) -> f64 {
        let correct = (0..self.n_instances)
            .filter(|&i| self.margin(classifier, i) == 1)
            .count();
        correct as f64 / self.n_instances as f64
    }

    /// Weighted vote at one instance; `weights` has one entry per classifier.
    pub fn vote(&self, weights: &[f64], instance: usize) -> i8 {
        weighted_sign(
            (0..self.n_classifiers).map(|j| self.get(j, instance)),
            weights,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Bagging,
    Adaboost,
}

/// How to build an ensemble: method, base learner, size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub base: LearnerSpec,
    pub size: usize,
}

pub fn train_ensemble(d: &Dataset, spec: &EnsembleSpec, seed: u64) -> Result<Ensemble> {
    match spec.kind {
        EnsembleKind::Bagging => train_bagging(d, spec.size, &spec.base, seed),
        EnsembleKind::Adaboost => train_adaboost(d, spec.size, &spec.base),
    }
}

/// Bagging: member `j` is trained on a bootstrap sample drawn with the seed
/// derived from `(seed, j)`, expressed as instance multiplicities. Members are
/// trained in parallel; the result does not depend on scheduling.
pub fn train_bagging<L: Learner + Sync>(
    d: &Dataset,
    size: usize,
    base: &L,
    seed: u64,
) -> Result<Ensemble> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "ensemble size must be at least 1".into(),
        ));
    }
    d.ensure_trainable()?;
    let members = (0..size)
        .into_par_iter()
        .map(|j| {
            let sample = bootstrap_sample(d, seed::derive(seed, &[j as u64]))?;
            let mut counts = vec![0.0; d.len()];
            sample.iter().for_each(|&i| counts[i] += 1.0);
            base.fit(d, &counts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(members)
}

/// Weighted error below which a round counts as perfect.
const PERFECT: f64 = 1e-12;
/// Error floor used for the member weight of a perfect member found after the
/// first round, keeping the weight finite.
const ERROR_FLOOR: f64 = 1e-10;

/// Discrete AdaBoost.
///
/// Round `t` trains on the current instance weights, computes the weighted
/// error `e_t` and the member weight `0.5 * ln((1 - e_t) / e_t)`, then
/// multiplies instance weights by `exp(-w_t y f_t(x))` and renormalises.
/// A perfect member (`e_t = 0`) is kept and ends training; a member with
/// `e_t >= 0.5` ends training and is dropped, unless it is the first member.
/// Member weights are normalised to sum to one.
pub fn train_adaboost<L: Learner>(d: &Dataset, size: usize, base: &L) -> Result<Ensemble> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "ensemble size must be at least 1".into(),
        ));
    }
    d.ensure_trainable()?;
    let n = d.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut alphas = Vec::new();
    for round in 0..size {
        let member = base.fit(d, &w)?;
        let preds: Vec<i8> = (0..n).map(|i| member.predict(d.row(i))).collect();
        let err: f64 = (0..n)
            .filter(|&i| preds[i] != d.label(i))
            .map(|i| w[i])
            .sum();
        if err <= PERFECT {
            if round == 0 {
                return Ensemble::new(vec![member], vec![1.0]);
            }
            alphas.push(0.5 * ((1.0 - ERROR_FLOOR) / ERROR_FLOOR).ln());
            members.push(member);
            break;
        }
        if err >= 0.5 {
            if round == 0 {
                return Ensemble::new(vec![member], vec![1.0]);
            }
            break;
        }
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        for i in 0..n {
            w[i] *= (-alpha * f64::from(d.label(i) * preds[i])).exp();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        members.push(member);
        alphas.push(alpha);
    }
    Ensemble::new(members, alphas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::two_gaussians;

    fn constant(label: i8) -> Classifier {
        Classifier::Constant { label }
    }

    fn line(ys: &[i8]) -> Dataset {
        let rows = (1..=ys.len()).map(|i| vec![i as f64]).collect();
        Dataset::new("line", rows, ys.to_vec()).unwrap()
    }

    fn accuracy(e: &Ensemble, d: &Dataset) -> f64 {
        (0..d.len())
            .map(|i| match e.vote(d.row(i)) * d.label(i) {
                1 => 1.0,
                0 => 0.5,
                _ => 0.0,
            })
            .sum::<f64>()
            / d.len() as f64
    }

    #[test]
    fn vote_tie_and_majority() {
        let e = Ensemble::new(vec![constant(1), constant(-1)], vec![0.5, 0.5]).unwrap();
        assert_eq!(e.vote(&[0.0]), 0);
        let e = Ensemble::uniform(vec![constant(1), constant(1), constant(-1)]).unwrap();
        assert_eq!(e.vote(&[0.0]), 1);
        let e = Ensemble::uniform(vec![constant(-1)]).unwrap();
        assert_eq!(e.vote(&[0.0]), -1);
    }

    #[test]
    fn uniform_even_splits_tie_exactly() {
        for n in [2usize, 4, 6, 10, 20, 30] {
            let members = (0..n)
                .map(|j| constant(if j % 2 == 0 { 1 } else { -1 }))
                .collect();
            let e = Ensemble::uniform(members).unwrap();
            assert_eq!(e.vote(&[0.0]), 0, "n = {n}");
        }
    }

    #[test]
    fn construction_normalises_and_validates() {
        let e = Ensemble::new(vec![constant(1), constant(-1)], vec![3.0, 1.0]).unwrap();
        assert_eq!(e.weights(), &[0.75, 0.25]);
        assert!(Ensemble::new(vec![], vec![]).is_err());
        assert!(Ensemble::new(vec![constant(1)], vec![-1.0]).is_err());
        assert!(Ensemble::new(vec![constant(1)], vec![0.0]).is_err());
        assert!(Ensemble::new(vec![constant(1)], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn prediction_matrix_shape() {
        let d = line(&[1, -1, 1]);
        let e = Ensemble::uniform(vec![constant(1)]).unwrap();
        let pm = e.predictions(&d);
        assert_eq!((pm.n_classifiers(), pm.n_instances()), (1, 3));
        assert_eq!(pm.row(0), &[1, 1, 1]);
        assert_eq!(pm, e.predictions(&d));
        assert!(PredictionMatrix::from_rows(vec![vec![1, 0]], vec![1, 1]).is_err());
        assert!(PredictionMatrix::from_rows(vec![vec![1]], vec![1, 1]).is_err());
    }

    #[test]
    fn bagging_singleton_equals_member() {
        let d = two_gaussians(60, 2.0, 3).unwrap();
        let e = train_bagging(&d, 1, &LearnerSpec::Stump, 11).unwrap();
        for i in 0..d.len() {
            assert_eq!(e.vote(d.row(i)), e.members()[0].predict(d.row(i)));
        }
    }

    #[test]
    fn bagging_is_seeded() {
        let d = two_gaussians(80, 1.5, 3).unwrap();
        let spec = LearnerSpec::Tree { max_depth: 3 };
        let a = train_bagging(&d, 7, &spec, 5).unwrap();
        let b = train_bagging(&d, 7, &spec, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predictions(&d), b.predictions(&d));
        assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bagging_beats_or_matches_single_stump_on_separable_data() {
        // linearly separable: positives shifted far along both axes
        let d = two_gaussians(200, 8.0, 1).unwrap();
        let w = vec![1.0; d.len()];
        let single = Ensemble::uniform(vec![LearnerSpec::Stump.fit(&d, &w).unwrap()]).unwrap();
        let bag = train_bagging(&d, 11, &LearnerSpec::Stump, 7).unwrap();
        assert!(
            accuracy(&bag, &d) >= accuracy(&single, &d),
            "{} < {}",
            accuracy(&bag, &d),
            accuracy(&single, &d)
        );
    }

    #[test]
    fn adaboost_stops_on_perfect_first_round() {
        let d = line(&[-1, -1, 1, 1]);
        let e = train_adaboost(&d, 5, &LearnerSpec::Stump).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.weights(), &[1.0]);
        for i in 0..4 {
            assert_eq!(e.vote(d.row(i)), e.members()[0].predict(d.row(i)));
        }
    }

    /// Hand replay of three rounds on x = 1..4, y = (-,+,-,+): round errors
    /// 1/4, 1/6, 1/5 give member weights proportional to ln 3, ln 5, ln 4,
    /// and the combined vote's training error goes 1/4, 1/4, 0.
    #[test]
    fn adaboost_xor_rounds() {
        let d = line(&[-1, 1, -1, 1]);
        let mut errors = Vec::new();
        for rounds in 1..=3 {
            let e = train_adaboost(&d, rounds, &LearnerSpec::Stump).unwrap();
            assert_eq!(e.len(), rounds);
            assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            errors.push(1.0 - accuracy(&e, &d));
        }
        assert_eq!(errors, vec![0.25, 0.25, 0.0]);
        let e = train_adaboost(&d, 3, &LearnerSpec::Stump).unwrap();
        let total = 60f64.ln();
        for (w, expect) in e.weights().iter().zip([3f64.ln(), 5f64.ln(), 4f64.ln()]) {
            assert!((w - expect / total).abs() < 1e-12);
        }
        // the exponential-loss bound prod 2 sqrt(e (1 - e)) falls every round
        let bound: Vec<f64> = [0.25f64, 1.0 / 6.0, 0.2]
            .iter()
            .scan(1.0, |acc, e| {
                *acc *= 2.0 * (e * (1.0 - e)).sqrt();
                Some(*acc)
            })
            .collect();
        assert!(bound.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn adaboost_weights_normalised() {
        let d = two_gaussians(120, 1.0, 9).unwrap();
        let e = train_adaboost(&d, 15, &LearnerSpec::Stump).unwrap();
        assert!(e.len() >= 2);
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.weights().iter().all(|&w| w >= 0.0));
    }
}
