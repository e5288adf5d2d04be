//! Base learners, ensemble construction and weighted plurality voting.

mod ensemble;
mod model;
mod stump;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

pub use ensemble::{
    train_adaboost, train_bagging, train_ensemble, Ensemble, EnsembleKind, EnsembleSpec,
    PredictionMatrix,
};
pub use model::{SavedModel, MODEL_VERSION};
pub use stump::train_stump;
pub use tree::{train_tree, Node};

/// A trained binary classifier. Predictions are always -1 or +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Constant {
        label: i8,
    },
    /// Predicts `polarity` when `x[feature] > threshold`, `-polarity` otherwise.
    Stump {
        feature: usize,
        threshold: f64,
        polarity: i8,
    },
    /// Binary tree stored as a node arena; node 0 is the root and
    /// `x[feature] <= threshold` descends left.
    Tree {
        max_depth: usize,
        nodes: Vec<Node>,
    },
}

impl Classifier {
    pub fn predict(&self, x: &[f64]) -> i8 {
        match self {
            Classifier::Constant { label } => *label,
            Classifier::Stump {
                feature,
                threshold,
                polarity,
            } => {
                if x[*feature] > *threshold {
                    *polarity
                } else {
                    -*polarity
                }
            }
            Classifier::Tree { nodes, .. } => tree::predict(nodes, x),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Classifier::Constant { label } => format!("constant({label:+})"),
            Classifier::Stump {
                feature,
                threshold,
                polarity,
            } => format!("stump(feature={feature}, threshold={threshold}, polarity={polarity:+})"),
            Classifier::Tree { max_depth, nodes } => {
                format!("tree(max_depth={max_depth}, nodes={})", nodes.len())
            }
        }
    }

    /// Weighted 0/1 error on `d` (weights need not be normalised).
    pub fn weighted_error(&self, d: &Dataset, weights: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        let wrong: f64 = (0..d.len())
            .filter(|&i| self.predict(d.row(i)) != d.label(i))
            .map(|i| weights[i])
            .sum();
        wrong / total
    }

    /// Structural checks used when decoding untrusted model files.
    pub(crate) fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Model(msg));
        match self {
            Classifier::Constant { label } if !is_sign(*label) => {
                bad(format!("constant label {label} is not -1 or +1"))
            }
            Classifier::Constant { .. } => Ok(()),
            Classifier::Stump {
                feature,
                threshold,
                polarity,
            } => {
                if *feature >= n_features {
                    bad(format!(
                        "stump feature {feature} out of range ({n_features} features)"
                    ))
                } else if !threshold.is_finite() {
                    bad("stump threshold is not finite".into())
                } else if !is_sign(*polarity) {
                    bad(format!("stump polarity {polarity} is not -1 or +1"))
                } else {
                    Ok(())
                }
            }
            Classifier::Tree { nodes, .. } => tree::validate(nodes, n_features),
        }
    }
}

fn is_sign(v: i8) -> bool {
    v == 1 || v == -1
}

/// Something that turns weighted data into a [`Classifier`].
pub trait Learner {
    fn fit(&self, d: &Dataset, instance_weights: &[f64]) -> Result<Classifier>;
}

/// The base learners shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Stump,
    Tree { max_depth: usize },
}

impl LearnerSpec {
    pub fn descriptor(&self) -> String {
        match self {
            LearnerSpec::Stump => "stump".into(),
            LearnerSpec::Tree { max_depth } => format!("tree(max_depth={max_depth})"),
        }
    }
}

impl Learner for LearnerSpec {
    fn fit(&self, d: &Dataset, instance_weights: &[f64]) -> Result<Classifier> {
        match *self {
            LearnerSpec::Stump => train_stump(d, instance_weights),
            LearnerSpec::Tree { max_depth } => train_tree(d, instance_weights, max_depth),
        }
    }
}

/// Instances with positive weight, and the weights renormalised over them.
pub(crate) fn active_instances(d: &Dataset, weights: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    if weights.len() != d.len() {
        return Err(Error::InvalidArgument(format!(
            "{} instance weights for {} instances",
            weights.len(),
            d.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument(
            "instance weights must be finite and non-negative".into(),
        ));
    }
    let active: Vec<usize> = (0..d.len()).filter(|&i| weights[i] > 0.0).collect();
    let total: f64 = active.iter().map(|&i| weights[i]).sum();
    if active.is_empty() || total <= 0.0 {
        return Err(Error::InvalidArgument(
            "instance weights sum to zero".into(),
        ));
    }
    let mut w = vec![0.0; d.len()];
    for &i in &active {
        w[i] = weights[i] / total;
    }
    Ok((active, w))
}

/// Weighted (+1, -1) mass over `idx`.
pub(crate) fn class_mass(d: &Dataset, w: &[f64], idx: &[usize]) -> (f64, f64) {
    idx.iter().fold((0.0, 0.0), |(p, n), &i| {
        if d.label(i) == 1 {
            (p + w[i], n)
        } else {
            (p, n + w[i])
        }
    })
}

/// Midpoint between two consecutive distinct sorted values, kept strictly
/// below `hi` so that `lo` and `hi` land on different sides.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
pub(crate) fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}
