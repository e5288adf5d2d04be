use serde::{Deserialize, Serialize};

use super::{active_instances, class_mass, is_sign, midpoint, Classifier};
use crate::data::Dataset;
use crate::{Error, Result};

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: i8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

pub(super) fn predict(nodes: &[Node], x: &[f64]) -> i8 {
    let mut at = 0;
    loop {
        match nodes[at] {
            Node::Leaf { label } => return label,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x[feature] <= threshold { left } else { right },
        }
    }
}

/// Children must point strictly forward, which rules out cycles.
pub(super) fn validate(nodes: &[Node], n_features: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Model("tree has no nodes".into()));
    }
    for (k, node) in nodes.iter().enumerate() {
        match *node {
            Node::Leaf { label } if !is_sign(label) => {
                return Err(Error::Model(format!(
                    "leaf {k} label {label} is not -1 or +1"
                )))
            }
            Node::Leaf { .. } => {}
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if feature >= n_features || !threshold.is_finite() {
                    return Err(Error::Model(format!("node {k} has an invalid split")));
                }
                if left <= k || right <= k || left >= nodes.len() || right >= nodes.len() {
                    return Err(Error::Model(format!("node {k} has invalid child links")));
                }
            }
        }
    }
    Ok(())
}

fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let (p, q) = (pos / total, neg / total);
    1.0 - p * p - q * q
}

struct Builder<'a> {
    d: &'a Dataset,
    w: Vec<f64>,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (pos, neg) = class_mass(self.d, &self.w, &idx);
        let label = if pos >= neg { 1 } else { -1 };
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { label });
        if depth >= self.max_depth || pos == 0.0 || neg == 0.0 {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(&idx, pos, neg) else {
            return at;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.d.value(i, feature) <= threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    /// Threshold minimising the weighted Gini impurity of the children.
    /// Zero-gain splits are accepted: impurity never rises under a split, and
    /// XOR-like cells only separate one level further down.
    fn best_split(&self, idx: &[usize], pos: f64, neg: f64) -> Option<(usize, f64)> {
        let total = pos + neg;
        let parent = gini(pos, neg);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.d.n_features() {
            order.sort_by(|&a, &b| self.d.value(a, f).total_cmp(&self.d.value(b, f)));
            let (mut lp, mut ln) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                if self.d.label(i) == 1 {
                    lp += self.w[i];
                } else {
                    ln += self.w[i];
                }
                let (lo, hi) = (self.d.value(i, f), self.d.value(order[k + 1], f));
                if lo == hi {
                    continue;
                }
                let (lw, rw) = (lp + ln, total - lp - ln);
                let impurity = (lw * gini(lp, ln) + rw * gini(pos - lp, neg - ln)) / total;
                if impurity > parent + TIE_EPS {
                    continue;
                }
                if best.is_none_or(|(b, ..)| impurity < b - TIE_EPS) {
                    best = Some((impurity, f, midpoint(lo, hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Greedy binary tree with instance-weighted Gini impurity and axis-aligned
/// midpoint thresholds. Growth stops at `max_depth`, at pure nodes, or when
/// no threshold separates the node. Leaves predict the weighted majority
/// (+1 on exact ties).
pub fn train_tree(d: &Dataset, instance_weights: &[f64], max_depth: usize) -> Result<Classifier> {
    if max_depth == 0 {
        return Err(Error::InvalidArgument(
            "max_depth must be at least 1".into(),
        ));
    }
    let (active, w) = active_instances(d, instance_weights)?;
    let mut builder = Builder {
        d,
        w,
        max_depth,
        nodes: Vec::new(),
    };
    builder.grow(active, 0);
    Ok(Classifier::Tree {
        max_depth,
        nodes: builder.nodes,
    })
}
