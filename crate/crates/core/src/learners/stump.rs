use super::{active_instances, class_mass, midpoint, Classifier};
use crate::data::Dataset;
use crate::Result;

const TIE_EPS: f64 = 1e-12;

/// Exhaustive decision-stump search over midpoints between consecutive
/// distinct feature values, minimising weighted 0/1 error.
///
/// Ties go to the lowest feature index, then the lowest threshold, then
/// polarity +1. The majority-class constant competes too and wins only when
/// strictly better than every split (for example when all values coincide).
pub fn train_stump(d: &Dataset, instance_weights: &[f64]) -> Result<Classifier> {
    let (active, w) = active_instances(d, instance_weights)?;
    let (w_pos, w_neg) = class_mass(d, &w, &active);
    let majority = if w_pos >= w_neg { 1 } else { -1 };
    if w_pos == 0.0 || w_neg == 0.0 {
        return Ok(Classifier::Constant { label: majority });
    }

    let mut best: Option<(f64, usize, f64, i8)> = None;
    let mut order = active.clone();
    for f in 0..d.n_features() {
        order.sort_by(|&a, &b| d.value(a, f).total_cmp(&d.value(b, f)));
        // weighted mass of each class at or below the current threshold
        let (mut left_pos, mut left_neg) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if d.label(i) == 1 {
                left_pos += w[i];
            } else {
                left_neg += w[i];
            }
            let (lo, hi) = (d.value(i, f), d.value(order[k + 1], f));
            if lo == hi {
                continue;
            }
            let threshold = midpoint(lo, hi);
            for (polarity, err) in [
                (1i8, left_pos + (w_neg - left_neg)),
                (-1i8, left_neg + (w_pos - left_pos)),
            ] {
                if best.is_none_or(|(b, ..)| err < b - TIE_EPS) {
                    best = Some((err, f, threshold, polarity));
                }
            }
        }
    }

    Ok(match best {
        Some((err, feature, threshold, polarity)) if err <= w_pos.min(w_neg) + TIE_EPS => {
            Classifier::Stump {
                feature,
                threshold,
                polarity,
            }
        }
        _ => Classifier::Constant { label: majority },
    })
}
