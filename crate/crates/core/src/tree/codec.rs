//! Tree JSON documents.
//!
//! ```text
//! tree  = {id, name, dataset_signature, root, created_at?, modified_at?}
//! node  = {"leaf": {label, total, positive}}
//!       | {"split": {rule, left, right, missing?}}
//! rule  = {kind: "feature" | "custom" | "model" | "treeref" | "visual", ...}
//! ```
//!
//! Error locations name nodes by their position in the tree (`$.root.left`)
//! without the `leaf`/`split` wrapper key, so a bad rule kind on the root is
//! reported at `$.root.rule.kind`.

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value as Json};

use super::geometry::{Point, Polygon};
use super::rule::{CustomFeature, CustomRule, FeatureRule, FeatureTest, ModelRule, SplitRule, TreeRefRule, VisualRule};
use super::{DecisionTree, Direction, Leaf, Node, Split};
use crate::dataset::{Label, Signature};
use crate::error::{Error, Result};
use crate::json::{as_array, as_f64, as_str, index, join, parse_document, to_canonical_string, ObjReader};
use crate::learners::TrainedModel;

pub fn tree_to_json(tree: &DecisionTree) -> String {
    to_canonical_string(&tree_to_value(tree))
}

pub fn tree_from_json(text: &str) -> Result<DecisionTree> {
    tree_from_value(&parse_document(text)?)
}

fn timestamp(t: &DateTime<Utc>) -> Json {
    Json::String(t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
}

pub fn tree_to_value(tree: &DecisionTree) -> Json {
    let mut doc = Map::new();
    doc.insert("id".into(), json!(tree.id));
    doc.insert("name".into(), json!(tree.name));
    doc.insert("dataset_signature".into(), json!(tree.dataset_signature));
    doc.insert("root".into(), node_to_value(&tree.root));
    if let Some(t) = &tree.created_at {
        doc.insert("created_at".into(), timestamp(t));
    }
    if let Some(t) = &tree.modified_at {
        doc.insert("modified_at".into(), timestamp(t));
    }
    Json::Object(doc)
}

fn node_to_value(node: &Node) -> Json {
    match node {
        Node::Leaf(l) => json!({"leaf": {"label": l.label, "total": l.total, "positive": l.positive}}),
        Node::Split(s) => {
            let mut inner = Map::new();
            inner.insert("rule".into(), rule_to_value(&s.rule));
            inner.insert("left".into(), node_to_value(&s.left));
            inner.insert("right".into(), node_to_value(&s.right));
            if let Some(d) = s.missing {
                inner.insert("missing".into(), json!(d));
            }
            json!({"split": inner})
        }
    }
}

pub fn rule_to_value(rule: &SplitRule) -> Json {
    match rule {
        SplitRule::Feature(f) => match &f.test {
            FeatureTest::Threshold(t) => json!({"kind": "feature", "feature": f.feature, "threshold": t}),
            FeatureTest::Categories(c) => json!({"kind": "feature", "feature": f.feature, "left_categories": c}),
        },
        SplitRule::Custom(c) => {
            let mut doc = json!({
                "kind": "custom",
                "weights": c.feature.weights,
                "offset": c.feature.offset,
                "threshold": c.threshold,
            });
            if let Some(name) = &c.feature.name {
                doc["name"] = json!(name);
            }
            doc
        }
        SplitRule::Model(m) => json!({"kind": "model", "features": m.features, "model": m.model.to_json()}),
        SplitRule::TreeRef(t) => json!({"kind": "treeref", "tree_id": t.tree_id}),
        SplitRule::Visual(v) => {
            let polygons: Vec<Vec<[f64; 2]>> =
                v.polygons.iter().map(|p| p.vertices.iter().map(|pt| [pt.x, pt.y]).collect()).collect();
            json!({"kind": "visual", "feature_x": v.feature_x, "feature_y": v.feature_y, "polygons": polygons})
        }
    }
}

pub fn tree_from_value(doc: &Json) -> Result<DecisionTree> {
    let mut r = ObjReader::new(doc, "$")?;
    let id = r.string("id")?;
    let name = r.string("name")?;
    let dataset_signature = Signature(r.string("dataset_signature")?);
    let root = node_from_value(r.req("root")?, "$.root")?;
    let created_at = read_timestamp(&mut r, "created_at")?;
    let modified_at = read_timestamp(&mut r, "modified_at")?;
    r.finish()?;
    Ok(DecisionTree { id, name, dataset_signature, root, created_at, modified_at })
}

fn read_timestamp(r: &mut ObjReader<'_>, key: &str) -> Result<Option<DateTime<Utc>>> {
    match r.opt_string(key)? {
        None => Ok(None),
        Some(s) => DateTime::parse_from_rfc3339(&s)
            .map(|t| Some(t.with_timezone(&Utc)))
            .map_err(|e| Error::schema(r.field_path(key), format!("bad timestamp: {e}"))),
    }
}

fn node_from_value(value: &Json, path: &str) -> Result<Node> {
    let obj = value.as_object().ok_or_else(|| Error::schema(path, "expected a node object"))?;
    if obj.len() != 1 {
        return Err(Error::schema(path, "node must have exactly one of `leaf` or `split`"));
    }
    let (tag, body) = obj.iter().next().expect("one entry");
    let mut r = ObjReader::new(body, path)?;
    let node = match tag.as_str() {
        "leaf" => {
            let label = Label::parse(&r.string("label")?, &r.field_path("label"))?;
            let total = r.count("total")?;
            let positive = r.count("positive")?;
            if positive > total {
                return Err(Error::schema(r.field_path("positive"), "positive count exceeds total"));
            }
            Node::Leaf(Leaf { label, total, positive })
        }
        "split" => {
            let rule = rule_from_value(r.req("rule")?, &r.field_path("rule"))?;
            let left = node_from_value(r.req("left")?, &r.field_path("left"))?;
            let right = node_from_value(r.req("right")?, &r.field_path("right"))?;
            let missing = match r.opt_string("missing")?.as_deref() {
                None => None,
                Some("left") => Some(Direction::Left),
                Some("right") => Some(Direction::Right),
                Some(other) => {
                    return Err(Error::schema(r.field_path("missing"), format!("unknown direction `{other}`")))
                }
            };
            Node::Split(Split { rule, left: Box::new(left), right: Box::new(right), missing })
        }
        other => return Err(Error::schema(join(path, other), "expected `leaf` or `split`")),
    };
    r.finish()?;
    Ok(node)
}

fn nonempty_name(r: &mut ObjReader<'_>, key: &str) -> Result<String> {
    let s = r.string(key)?;
    if s.is_empty() {
        return Err(Error::schema(r.field_path(key), "feature name must be non-empty"));
    }
    Ok(s)
}

fn string_list(value: &Json, path: &str) -> Result<Vec<String>> {
    let items = as_array(value, path)?;
    if items.is_empty() {
        return Err(Error::schema(path, "list must be non-empty"));
    }
    let mut out: Vec<String> = Vec::with_capacity(items.len());
    for (i, v) in items.iter().enumerate() {
        let s = as_str(v, &index(path, i))?;
        if out.iter().any(|o| o == s) {
            return Err(Error::schema(index(path, i), format!("duplicate entry `{s}`")));
        }
        out.push(s.to_owned());
    }
    Ok(out)
}

/// Decodes a single rule object; `path` prefixes error locations.
pub fn rule_from_value(value: &Json, path: &str) -> Result<SplitRule> {
    let mut r = ObjReader::new(value, path)?;
    let kind = r.string("kind")?;
    let rule = match kind.as_str() {
        "feature" => {
            let feature = nonempty_name(&mut r, "feature")?;
            let threshold = r.opt("threshold");
            let categories = r.opt("left_categories");
            let test = match (threshold, categories) {
                (Some(t), None) => FeatureTest::Threshold(as_f64(t, &r.field_path("threshold"))?),
                (None, Some(c)) => FeatureTest::Categories(string_list(c, &r.field_path("left_categories"))?),
                _ => {
                    return Err(Error::schema(
                        path,
                        "feature rule needs exactly one of `threshold` or `left_categories`",
                    ))
                }
            };
            SplitRule::Feature(FeatureRule { feature, test })
        }
        "custom" => {
            let name = r.opt_string("name")?;
            let wpath = r.field_path("weights");
            let wobj = r.req("weights")?.as_object().ok_or_else(|| Error::schema(&wpath, "expected an object"))?;
            if wobj.is_empty() {
                return Err(Error::schema(&wpath, "custom feature needs at least one weight"));
            }
            let mut weights = BTreeMap::new();
            for (k, v) in wobj {
                if k.is_empty() {
                    return Err(Error::schema(&wpath, "feature name must be non-empty"));
                }
                weights.insert(k.clone(), as_f64(v, &join(&wpath, k))?);
            }
            let offset = r.number("offset")?;
            let threshold = r.number("threshold")?;
            SplitRule::Custom(CustomRule { feature: CustomFeature { name, weights, offset }, threshold })
        }
        "model" => {
            let features = string_list(r.req("features")?, &r.field_path("features"))?;
            let model = TrainedModel::from_json_at(r.req("model")?, &r.field_path("model"))?;
            if let Some(f) = model.required_features().iter().find(|f| !features.iter().any(|g| g == *f)) {
                return Err(Error::schema(
                    r.field_path("model"),
                    format!("model reads `{f}`, which is outside the rule's feature subset"),
                ));
            }
            SplitRule::Model(ModelRule { model, features })
        }
        "treeref" => {
            let tree_id = r.string("tree_id")?;
            if tree_id.is_empty() {
                return Err(Error::schema(r.field_path("tree_id"), "tree id must be non-empty"));
            }
            SplitRule::TreeRef(TreeRefRule { tree_id })
        }
        "visual" => {
            let feature_x = nonempty_name(&mut r, "feature_x")?;
            let feature_y = nonempty_name(&mut r, "feature_y")?;
            let ppath = r.field_path("polygons");
            let list = as_array(r.req("polygons")?, &ppath)?;
            if list.is_empty() {
                return Err(Error::schema(&ppath, "visual rule needs at least one polygon"));
            }
            let mut polygons = Vec::with_capacity(list.len());
            for (i, poly) in list.iter().enumerate() {
                let pp = index(&ppath, i);
                let verts = as_array(poly, &pp)?;
                if verts.len() < 3 {
                    return Err(Error::schema(&pp, "polygon needs at least 3 vertices"));
                }
                let mut vertices = Vec::with_capacity(verts.len());
                for (j, v) in verts.iter().enumerate() {
                    let vp = index(&pp, j);
                    let xy = as_array(v, &vp)?;
                    if xy.len() != 2 {
                        return Err(Error::schema(&vp, "vertex must be [x, y]"));
                    }
                    vertices.push(Point::new(as_f64(&xy[0], &index(&vp, 0))?, as_f64(&xy[1], &index(&vp, 1))?));
                }
                polygons.push(Polygon::new(vertices));
            }
            SplitRule::Visual(VisualRule { feature_x, feature_y, polygons })
        }
        other => return Err(Error::schema(r.field_path("kind"), format!("unknown rule kind `{other}`"))),
    };
    r.finish()?;
    Ok(rule)
}
