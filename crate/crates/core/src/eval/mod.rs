//! Tree evaluation under the three protocols, ROC AUC, and a majority-vote
//! ensemble over library trees.

mod auc;
mod ensemble;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{percentage_split, Dataset, DatasetResolver, Label, Sample, Schema};
use crate::error::{Error, Result};
use crate::tree::{fit_leaf_stats, predict, validate_tree, DecisionTree, TreeResolver};

pub use self::auc::auc;
pub use self::ensemble::{ensemble_predict, evaluate_ensemble};

pub const TRAINING_SET_WARNING: &str = "training-set evaluation may overfit";

/// How a tree's quality is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum EvalMode {
    /// Fit and score on the whole dataset.
    TrainingSet,
    /// Fit on the whole dataset, score on a separate dataset with the same signature.
    TestSet { test_dataset_id: String },
    /// Fit on a seeded stratified split, score on the held-out side.
    PercentageSplit { fraction: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Positive, Label::Positive) => self.tp += 1,
            (Label::Negative, Label::Positive) => self.fp += 1,
            (Label::Positive, Label::Negative) => self.fn_ += 1,
            (Label::Negative, Label::Negative) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafStat {
    pub path: String,
    pub count: u64,
    pub fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: EvalMode,
    pub accuracy: f64,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
    pub leaves: Vec<LeafStat>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        crate::json::to_canonical_string(self)
    }
}

/// Training side, evaluation side and the evaluation schema for one mode.
pub(crate) struct Sides<'a> {
    pub train: Vec<&'a Sample>,
    pub eval: Vec<&'a Sample>,
    pub eval_schema: &'a Schema,
    pub warnings: Vec<String>,
}

/// Keeps a resolved test dataset alive while `Sides` borrows from it.
pub(crate) enum Held {
    None,
    Test(Arc<Dataset>),
}

pub(crate) fn hold_test(dataset: &Dataset, mode: &EvalMode, datasets: &dyn DatasetResolver) -> Result<Held> {
    match mode {
        EvalMode::TestSet { test_dataset_id } => {
            let test = datasets
                .resolve_dataset(test_dataset_id)
                .ok_or_else(|| Error::NotFound(format!("dataset `{test_dataset_id}`")))?;
            if test.signature() != dataset.signature() {
                return Err(Error::SignatureMismatch(format!(
                    "test dataset `{test_dataset_id}` does not match `{}`",
                    dataset.id
                )));
            }
            Ok(Held::Test(test))
        }
        _ => Ok(Held::None),
    }
}

pub(crate) fn sides<'a>(dataset: &'a Dataset, mode: &EvalMode, held: &'a Held) -> Result<Sides<'a>> {
    match (mode, held) {
        (EvalMode::TrainingSet, _) => Ok(Sides {
            train: dataset.all(),
            eval: dataset.all(),
            eval_schema: dataset.schema(),
            warnings: vec![TRAINING_SET_WARNING.to_owned()],
        }),
        (EvalMode::TestSet { .. }, Held::Test(test)) => {
            Ok(Sides { train: dataset.all(), eval: test.all(), eval_schema: test.schema(), warnings: Vec::new() })
        }
        (EvalMode::TestSet { .. }, Held::None) => unreachable!("test dataset resolved by hold_test"),
        (EvalMode::PercentageSplit { fraction, seed }, _) => {
            let part = percentage_split(dataset, *fraction, *seed)?;
            let warnings = part
                .singleton_classes
                .iter()
                .map(|l| {
                    format!(
                        "class `{}` has a single sample; it was placed on the training side",
                        dataset.labeling().name_of(*l)
                    )
                })
                .collect();
            Ok(Sides {
                train: dataset.select(&part.train_indices),
                eval: dataset.select(&part.test_indices),
                eval_schema: dataset.schema(),
                warnings,
            })
        }
    }
}

/// Fits leaf statistics on the mode's training side and reports accuracy,
/// AUC over smoothed leaf scores, the confusion matrix and per-leaf counts
/// on its evaluation side.
pub fn evaluate(
    tree: &DecisionTree,
    dataset: &Dataset,
    mode: &EvalMode,
    lib: &dyn TreeResolver,
    datasets: &dyn DatasetResolver,
) -> Result<EvaluationReport> {
    validate_tree(tree, dataset.schema(), lib).map_err(Error::from_issues)?;
    let held = hold_test(dataset, mode, datasets)?;
    let sides = sides(dataset, mode, &held)?;
    let fitted = fit_leaf_stats(tree, &sides.train, dataset.schema(), lib)?;

    let mut confusion = ConfusionMatrix::default();
    let mut scores = Vec::with_capacity(sides.eval.len());
    let mut labels = Vec::with_capacity(sides.eval.len());
    let mut per_leaf: HashMap<String, (u64, u64)> = HashMap::new();
    for s in &sides.eval {
        let p = predict(&fitted, s, sides.eval_schema, lib)?;
        confusion.record(s.label, p.label);
        scores.push(p.score);
        labels.push(s.label);
        let entry = per_leaf.entry(p.leaf_path).or_default();
        entry.0 += 1;
        if p.label == s.label {
            entry.1 += 1;
        }
    }
    let auc = auc(&scores, &labels)?;
    let total = sides.eval.len() as f64;
    let leaves = fitted
        .root
        .leaves()
        .into_iter()
        .map(|(path, leaf)| {
            let (count, correct) = per_leaf.get(&path).copied().unwrap_or_default();
            LeafStat {
                count,
                fraction: count as f64 / total,
                accuracy: (count > 0).then(|| correct as f64 / count as f64),
                label: leaf.label,
                path,
            }
        })
        .collect();

    Ok(EvaluationReport {
        mode: mode.clone(),
        accuracy: confusion.accuracy(),
        auc,
        confusion,
        leaves,
        warnings: sides.warnings,
    })
}
