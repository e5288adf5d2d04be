use serde::{Deserialize, Serialize};

use super::{Classifier, Ensemble, EnsembleKind, LearnerSpec};
use crate::{Error, Result};

pub const MODEL_VERSION: &str = "divprune-model-v1";

/// On-disk form of a trained ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedModel {
    pub version: String,
    pub ensemble: EnsembleKind,
    pub base: LearnerSpec,
    pub size: usize,
    pub seed: u64,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub members: Vec<Classifier>,
}

impl SavedModel {
    pub fn new(
        e: &Ensemble,
        kind: EnsembleKind,
        base: LearnerSpec,
        size: usize,
        seed: u64,
        feature_names: Vec<String>,
    ) -> Self {
        Self {
            version: MODEL_VERSION.into(),
            ensemble: kind,
            base,
            size,
            seed,
            n_features: feature_names.len(),
            feature_names,
            weights: e.weights().to_vec(),
            members: e.members().to_vec(),
        }
    }

    /// Decodes and validates a model document. Never panics on malformed input.
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let model: SavedModel =
            serde_json::from_slice(bytes).map_err(|e| Error::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serialises");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported version '{}' (expected '{MODEL_VERSION}')",
                self.version
            )));
        }
        if self.feature_names.len() != self.n_features {
            return Err(Error::Model(
                "feature_names length differs from n_features".into(),
            ));
        }
        if self.members.is_empty() || self.members.len() != self.weights.len() {
            return Err(Error::Model(format!(
                "{} members with {} weights",
                self.members.len(),
                self.weights.len()
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(
                "weights must be non-negative and sum to 1".into(),
            ));
        }
        for m in &self.members {
            m.validate(self.n_features)?;
        }
        Ok(())
    }

    pub fn ensemble(&self) -> Result<Ensemble> {
        Ensemble::new(self.members.clone(), self.weights.clone())
    }
}
