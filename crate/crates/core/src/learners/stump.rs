use super::{FeatureStats, StumpModel, TrainedModel};
use crate::dataset::{FeatureKind, Label, Sample, Schema};
use crate::error::{Error, Result};

/// Gains closer than this are treated as equal so ties fall to the earlier
/// (feature index, threshold) candidate.
const GAIN_TIE_EPS: f64 = 1e-12;

/// Binary Shannon entropy in bits of a node holding `positive` of `total`.
pub fn entropy_bits(positive: usize, total: usize) -> f64 {
    if total == 0 || positive == 0 || positive == total {
        return 0.0;
    }
    let p = positive as f64 / total as f64;
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = lo.midpoint(hi);
    // Adjacent floats: the midpoint rounds onto `lo`, so use `hi` to keep `lo` on the left.
    if mid <= lo {
        hi
    } else {
        mid
    }
}

fn laplace(positive: usize, total: usize) -> f64 {
    (positive as f64 + 1.0) / (total as f64 + 2.0)
}

struct Candidate {
    feature_index: usize,
    threshold: f64,
    gain: f64,
    left: (usize, usize),
    right: (usize, usize),
}

/// Exhaustive single-threshold search maximising information gain.
///
/// Candidates are midpoints between consecutive distinct values of each
/// subset feature; samples missing a feature are left out of that feature's
/// scoring only.
pub fn train_stump(samples: &[&Sample], schema: &Schema, subset: &[String]) -> Result<TrainedModel> {
    let pos = samples.iter().filter(|s| s.label.is_positive()).count();
    if pos == 0 || pos == samples.len() {
        return Err(Error::DegenerateData("training samples contain a single class".into()));
    }

    let mut features = Vec::with_capacity(subset.len());
    for name in subset {
        let f = schema.feature(name).ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        if f.kind != FeatureKind::Numeric {
            return Err(Error::BadHyperparameters(format!("feature `{name}` is not numeric")));
        }
        features.push(f);
    }
    features.sort_by_key(|f| f.index);
    features.dedup_by_key(|f| f.index);

    let mut best: Option<Candidate> = None;
    let mut dropped = Vec::new();
    for f in &features {
        let mut points: Vec<(f64, bool)> =
            samples.iter().filter_map(|s| s.values[f.index].as_number().map(|x| (x, s.label.is_positive()))).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = points.len();
        if n < 2 || points[0].0 == points[n - 1].0 {
            dropped.push(f.name.clone());
            continue;
        }
        let n_pos = points.iter().filter(|p| p.1).count();
        let parent = entropy_bits(n_pos, n);
        let mut left_pos = 0;
        for i in 0..n - 1 {
            if points[i].1 {
                left_pos += 1;
            }
            if points[i].0 == points[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            let right_pos = n_pos - left_pos;
            let gain = parent
                - (nl as f64 / n as f64) * entropy_bits(left_pos, nl)
                - (nr as f64 / n as f64) * entropy_bits(right_pos, nr);
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_TIE_EPS) {
                best = Some(Candidate {
                    feature_index: f.index,
                    threshold: split_point(points[i].0, points[i + 1].0),
                    gain,
                    left: (left_pos, nl),
                    right: (right_pos, nr),
                });
            }
        }
    }

    let best = best.ok_or_else(|| Error::DegenerateData("no feature has two distinct values".into()))?;
    let feature = &schema.features()[best.feature_index];
    let values: Vec<f64> = samples.iter().filter_map(|s| s.values[feature.index].as_number()).collect();
    let left_label = if 2 * best.left.0 >= best.left.1 { Label::Positive } else { Label::Negative };
    Ok(TrainedModel::Stump(StumpModel {
        feature: feature.name.clone(),
        threshold: best.threshold,
        left_label,
        p_left: laplace(best.left.0, best.left.1),
        p_right: laplace(best.right.0, best.right.1),
        gain: best.gain,
        stats: vec![FeatureStats::from_values(&feature.name, &values)],
        dropped,
    }))
}
