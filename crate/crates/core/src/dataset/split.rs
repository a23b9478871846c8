use serde::Serialize;

use super::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// A stratified train/test partition of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataPartition {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub fraction: f64,
    /// Classes with a single sample; that sample went to the train side.
    pub singleton_classes: Vec<Label>,
}

impl DataPartition {
    pub fn has_singleton_warning(&self) -> bool {
        !self.singleton_classes.is_empty()
    }
}

/// Per-class train quota: `round_half_up(fraction * n)`, clamped into
/// `[1, n - 1]` when the class has at least two samples.
pub fn stratum_train_count(fraction: f64, class_count: usize) -> usize {
    let raw = (fraction * class_count as f64 + 0.5).floor() as usize;
    if class_count >= 2 {
        raw.clamp(1, class_count - 1)
    } else {
        class_count
    }
}

/// Stratified percentage split.
///
/// Each class's indices (in sample order, positive class first) are shuffled
/// with one SplitMix64 stream seeded by `seed`; the first quota go to train.
pub fn percentage_split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<DataPartition> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut singleton_classes = Vec::new();
    for label in [Label::Positive, Label::Negative] {
        let mut members: Vec<usize> =
            dataset.samples().iter().enumerate().filter(|(_, s)| s.label == label).map(|(i, _)| i).collect();
        if members.is_empty() {
            return Err(Error::TooFewSamples(format!("class `{}` has no samples", dataset.labeling().name_of(label))));
        }
        if members.len() == 1 {
            singleton_classes.push(label);
        }
        rng.shuffle(&mut members);
        let quota = stratum_train_count(fraction, members.len());
        train.extend_from_slice(&members[..quota]);
        test.extend_from_slice(&members[quota..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(DataPartition { train_indices: train, test_indices: test, seed, fraction, singleton_classes })
}
