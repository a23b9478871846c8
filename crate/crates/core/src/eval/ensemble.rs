use super::{auc, hold_test, sides, ConfusionMatrix, EvalMode, EvaluationReport};
use crate::dataset::{Dataset, DatasetResolver, Label, Sample, Schema};
use crate::error::{Error, Result};
use crate::tree::{fit_leaf_stats, predict, validate_tree, DecisionTree, Prediction, TreeResolver};

/// Unweighted majority vote. A split vote goes to the side whose voters are
/// more confident on average (mean score for positive voters, mean of
/// `1 - score` for negative voters); an exact tie goes positive.
pub(crate) fn vote(predictions: &[Prediction]) -> Label {
    let (pos, neg): (Vec<&Prediction>, Vec<&Prediction>) = predictions.iter().partition(|p| p.label.is_positive());
    match pos.len().cmp(&neg.len()) {
        std::cmp::Ordering::Greater => Label::Positive,
        std::cmp::Ordering::Less => Label::Negative,
        std::cmp::Ordering::Equal => {
            let pos_conf = pos.iter().map(|p| p.score).sum::<f64>() / pos.len() as f64;
            let neg_conf = neg.iter().map(|p| 1.0 - p.score).sum::<f64>() / neg.len() as f64;
            if neg_conf > pos_conf {
                Label::Negative
            } else {
                Label::Positive
            }
        }
    }
}

fn check_signatures(trees: &[DecisionTree]) -> Result<()> {
    let first = trees.first().ok_or_else(|| Error::NotFound("ensemble needs at least one tree".into()))?;
    if let Some(t) = trees.iter().find(|t| t.dataset_signature != first.dataset_signature) {
        return Err(Error::SignatureMismatch(format!("tree `{}` differs from `{}`", t.id, first.id)));
    }
    Ok(())
}

/// Majority-vote label of `trees` for one sample.
pub fn ensemble_predict(
    trees: &[DecisionTree],
    sample: &Sample,
    schema: &Schema,
    lib: &dyn TreeResolver,
) -> Result<Label> {
    check_signatures(trees)?;
    let predictions = trees.iter().map(|t| predict(t, sample, schema, lib)).collect::<Result<Vec<_>>>()?;
    Ok(vote(&predictions))
}

/// Evaluates the ensemble like a single tree: every member is fitted on the
/// training side; the ranking score is the members' mean leaf score. The
/// report carries no per-leaf statistics.
pub fn evaluate_ensemble(
    trees: &[DecisionTree],
    dataset: &Dataset,
    mode: &EvalMode,
    lib: &dyn TreeResolver,
    datasets: &dyn DatasetResolver,
) -> Result<EvaluationReport> {
    check_signatures(trees)?;
    for t in trees {
        validate_tree(t, dataset.schema(), lib).map_err(Error::from_issues)?;
    }
    let held = hold_test(dataset, mode, datasets)?;
    let sides = sides(dataset, mode, &held)?;
    let fitted =
        trees.iter().map(|t| fit_leaf_stats(t, &sides.train, dataset.schema(), lib)).collect::<Result<Vec<_>>>()?;

    let mut confusion = ConfusionMatrix::default();
    let mut scores = Vec::with_capacity(sides.eval.len());
    let mut labels = Vec::with_capacity(sides.eval.len());
    for s in &sides.eval {
        let predictions = fitted.iter().map(|t| predict(t, s, sides.eval_schema, lib)).collect::<Result<Vec<_>>>()?;
        confusion.record(s.label, vote(&predictions));
        scores.push(predictions.iter().map(|p| p.score).sum::<f64>() / predictions.len() as f64);
        labels.push(s.label);
    }
    Ok(EvaluationReport {
        mode: mode.clone(),
        accuracy: confusion.accuracy(),
        auc: auc(&scores, &labels)?,
        confusion,
        leaves: Vec::new(),
        warnings: sides.warnings,
    })
}
