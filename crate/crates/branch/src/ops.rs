//! Store-backed operations shared by the HTTP handlers and the CLI, so both
//! produce the same documents for the same inputs.

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use branch_core::dataset::{Dataset, FeatureKind, Label};
use branch_core::error::{Error, Result};
use branch_core::eval::{evaluate, evaluate_ensemble, EvalMode, EvaluationReport};
use branch_core::learners::{train, LearnerSpec, TrainedModel};
use branch_core::store::{format_timestamp, DatasetRecord, Snapshot, TreeRecord};
use branch_core::tree::{
    route, rule_from_value, tree_to_value, validate_tree, CustomFeature, DecisionTree, Node, Route,
};

/// Tree record as returned by the API; the owner hash is never exposed.
pub fn record_json(rec: &TreeRecord, token: Option<&str>) -> Json {
    json!({
        "id": rec.id(),
        "tree": tree_to_value(&rec.tree),
        "visibility": rec.visibility,
        "created_at": format_timestamp(&rec.created_at),
        "updated_at": format_timestamp(&rec.updated_at),
        "owned": rec.is_owned_by(token),
    })
}

pub fn custom_feature_json(f: &CustomFeature) -> Json {
    json!({"name": f.name, "weights": f.weights, "offset": f.offset})
}

/// Descriptor plus feature list, per-feature summary and the custom
/// features registered for the dataset's signature.
pub fn dataset_detail(rec: &DatasetRecord, snap: &Snapshot) -> Json {
    let mut doc = rec.descriptor();
    let custom: Vec<Json> =
        snap.custom_features(rec.dataset.signature()).into_iter().map(custom_feature_json).collect();
    doc["features"] = json!(rec.dataset.features());
    doc["summary"] = json!(rec.dataset.summary());
    doc["custom_features"] = Json::Array(custom);
    doc
}

/// The dataset a stored tree is evaluated on: the named one, or else the
/// oldest stored dataset sharing the tree's signature.
pub fn evaluation_dataset<'a>(
    snap: &'a Snapshot,
    tree: &DecisionTree,
    dataset_id: Option<&str>,
) -> Result<&'a DatasetRecord> {
    match dataset_id {
        Some(id) => snap.dataset(id),
        None => snap
            .dataset_for_signature(&tree.dataset_signature)
            .ok_or_else(|| Error::NotFound(format!("dataset with signature `{}`", tree.dataset_signature))),
    }
}

/// Evaluates `tree` against stored data, resolving tree references and
/// held-out test sets through the snapshot.
pub fn evaluate_in_store(
    snap: &Snapshot,
    tree: &DecisionTree,
    dataset_id: Option<&str>,
    mode: &EvalMode,
) -> Result<EvaluationReport> {
    let ds = evaluation_dataset(snap, tree, dataset_id)?;
    evaluate(tree, &ds.dataset, mode, snap, snap)
}

pub fn ensemble_in_store(
    snap: &Snapshot,
    tree_ids: &[String],
    dataset_id: Option<&str>,
    mode: &EvalMode,
    token: Option<&str>,
) -> Result<EvaluationReport> {
    let trees =
        tree_ids.iter().map(|id| snap.tree(id, token).map(|r| (*r.tree).clone())).collect::<Result<Vec<_>>>()?;
    let first = trees.first().ok_or_else(|| Error::NotFound("ensemble needs at least one tree id".into()))?;
    let ds = evaluation_dataset(snap, first, dataset_id)?;
    evaluate_ensemble(&trees, &ds.dataset, mode, snap, snap)
}

/// Trains a model node on every sample of the dataset.
pub fn train_on(dataset: &Dataset, spec: &LearnerSpec) -> Result<TrainedModel> {
    train(&dataset.all(), dataset.schema(), spec)
}

/// Per-sample routing of one rule, as drawn by the visual split editor.
/// Returns side counts by class and the route of every sample in order.
pub fn route_preview(snap: &Snapshot, dataset: &Dataset, rule: &Json, token: Option<&str>) -> Result<Json> {
    let rule = rule_from_value(rule, "$.rule")?;
    let probe = DecisionTree::new(
        "",
        "",
        dataset.signature().clone(),
        Node::split(rule.clone(), Node::leaf(Label::Positive), Node::leaf(Label::Negative)),
    );
    let lib = snap.visible_to(token);
    validate_tree(&probe, dataset.schema(), &lib).map_err(|issues| {
        // Re-anchor issue paths on the request body.
        Error::from_issues(issues.into_iter().map(|i| rebase_issue(i, "$.root.rule", "$.rule")).collect())
    })?;
    let mut counts: BTreeMap<&str, [u64; 2]> = [("left", [0, 0]), ("right", [0, 0]), ("missing", [0, 0])].into();
    let mut routes = Vec::with_capacity(dataset.len());
    for s in dataset.samples() {
        let side = match route(&rule, s, dataset.schema(), &lib)? {
            Route::Left => "left",
            Route::Right => "right",
            Route::MissingInput => "missing",
        };
        counts.get_mut(side).expect("known side")[usize::from(!s.label.is_positive())] += 1;
        routes.push(side);
    }
    let counts: BTreeMap<&str, Json> =
        counts.into_iter().map(|(k, [p, n])| (k, json!({"positive": p, "negative": n}))).collect();
    Ok(json!({"counts": counts, "routes": routes}))
}

fn rebase_issue(issue: branch_core::ValidationIssue, from: &str, to: &str) -> branch_core::ValidationIssue {
    use branch_core::ValidationIssue as V;
    let fix = |p: String| match p.strip_prefix(from) {
        Some(rest) => format!("{to}{rest}"),
        None => p,
    };
    match issue {
        V::UnknownFeature { feature, path } => V::UnknownFeature { feature, path: fix(path) },
        V::KindMismatch { feature, expected, path } => V::KindMismatch { feature, expected, path: fix(path) },
        V::InvalidCategories { feature, reason, path } => V::InvalidCategories { feature, reason, path: fix(path) },
        V::SignatureMismatch { tree_id, path } => V::SignatureMismatch { tree_id, path: fix(path) },
        V::UnresolvableTreeRef { tree_id, path } => V::UnresolvableTreeRef { tree_id, path: fix(path) },
        other => other,
    }
}

/// `(x, y, label)` for every sample with both coordinates present.
pub fn scatter_points(dataset: &Dataset, x: &str, y: &str) -> Result<Json> {
    for name in [x, y] {
        let f = dataset.schema().feature(name).ok_or_else(|| Error::UnknownFeature(name.to_owned()))?;
        if f.kind != FeatureKind::Numeric {
            return Err(Error::ValidationFailed(vec![branch_core::ValidationIssue::KindMismatch {
                feature: name.to_owned(),
                expected: "numeric",
                path: "$".into(),
            }]));
        }
    }
    let mut points = Vec::new();
    for (i, s) in dataset.samples().iter().enumerate() {
        if let (Some(px), Some(py)) = (dataset.schema().number(s, x)?, dataset.schema().number(s, y)?) {
            points.push(json!({"index": i, "x": px, "y": py, "label": s.label}));
        }
    }
    Ok(json!({"x": x, "y": y, "points": points}))
}
