use std::collections::BTreeMap;

use super::geometry::{in_any, Point, Polygon};
use super::predict::predict_with_stack;
use super::TreeResolver;
use crate::dataset::{Sample, Schema, Value};
use crate::error::{Error, Result};
use crate::learners::TrainedModel;

/// Outcome of applying one split rule to one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Left,
    Right,
    MissingInput,
}

impl Route {
    fn from_left(is_left: bool) -> Route {
        if is_left {
            Route::Left
        } else {
            Route::Right
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureTest {
    /// Numeric: `value < threshold` goes left.
    Threshold(f64),
    /// Categorical: membership goes left.
    Categories(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRule {
    pub feature: String,
    pub test: FeatureTest,
}

/// A named linear combination `offset + sum(weight * value)` of numeric features.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomFeature {
    pub name: Option<String>,
    pub weights: BTreeMap<String, f64>,
    pub offset: f64,
}

impl CustomFeature {
    /// `None` when any weighted feature is missing.
    pub fn evaluate(&self, sample: &Sample, schema: &Schema) -> Result<Option<f64>> {
        let mut score = self.offset;
        for (name, w) in &self.weights {
            match schema.number(sample, name)? {
                Some(x) => score += w * x,
                None => return Ok(None),
            }
        }
        Ok(Some(score))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomRule {
    pub feature: CustomFeature,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRule {
    pub model: TrainedModel,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRefRule {
    pub tree_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualRule {
    pub feature_x: String,
    pub feature_y: String,
    pub polygons: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    Feature(FeatureRule),
    Custom(CustomRule),
    Model(ModelRule),
    TreeRef(TreeRefRule),
    Visual(VisualRule),
}

impl SplitRule {
    pub fn threshold(feature: &str, threshold: f64) -> SplitRule {
        SplitRule::Feature(FeatureRule { feature: feature.to_owned(), test: FeatureTest::Threshold(threshold) })
    }

    pub fn categories(feature: &str, left: &[&str]) -> SplitRule {
        SplitRule::Feature(FeatureRule {
            feature: feature.to_owned(),
            test: FeatureTest::Categories(left.iter().map(|s| s.to_string()).collect()),
        })
    }

    pub fn tree_ref(id: &str) -> SplitRule {
        SplitRule::TreeRef(TreeRefRule { tree_id: id.to_owned() })
    }

    /// Wire name of the rule kind.
    pub fn kind(&self) -> &'static str {
        match self {
            SplitRule::Feature(_) => "feature",
            SplitRule::Custom(_) => "custom",
            SplitRule::Model(_) => "model",
            SplitRule::TreeRef(_) => "treeref",
            SplitRule::Visual(_) => "visual",
        }
    }

    /// Short human-readable summary, e.g. `PSRC1 < 5.2`.
    pub fn summary(&self) -> String {
        match self {
            SplitRule::Feature(FeatureRule { feature, test: FeatureTest::Threshold(t) }) => format!("{feature} < {t}"),
            SplitRule::Feature(FeatureRule { feature, test: FeatureTest::Categories(c) }) => {
                format!("{feature} in {{{}}}", c.join(", "))
            }
            SplitRule::Custom(c) => {
                format!("{} < {}", c.feature.name.as_deref().unwrap_or("custom score"), c.threshold)
            }
            SplitRule::Model(m) => {
                format!("{:?} model on {} features predicts positive", m.model.kind(), m.features.len())
            }
            SplitRule::TreeRef(t) => format!("tree {} predicts positive", t.tree_id),
            SplitRule::Visual(v) => {
                format!("({}, {}) inside {} polygon(s)", v.feature_x, v.feature_y, v.polygons.len())
            }
        }
    }
}

/// Applies `rule` to `sample`.
pub fn route(rule: &SplitRule, sample: &Sample, schema: &Schema, lib: &dyn TreeResolver) -> Result<Route> {
    route_with_stack(rule, sample, schema, lib, &mut Vec::new())
}

pub(crate) fn route_with_stack(
    rule: &SplitRule,
    sample: &Sample,
    schema: &Schema,
    lib: &dyn TreeResolver,
    stack: &mut Vec<String>,
) -> Result<Route> {
    match rule {
        SplitRule::Feature(f) => match (schema.value(sample, &f.feature)?, &f.test) {
            (Value::Missing, _) => Ok(Route::MissingInput),
            (Value::Number(x), FeatureTest::Threshold(t)) => Ok(Route::from_left(x < t)),
            (Value::Category(c), FeatureTest::Categories(left)) => Ok(Route::from_left(left.contains(c))),
            _ => Err(Error::UnknownFeature(format!("{} (kind does not match rule)", f.feature))),
        },
        SplitRule::Custom(c) => Ok(match c.feature.evaluate(sample, schema)? {
            Some(score) => Route::from_left(score < c.threshold),
            None => Route::MissingInput,
        }),
        SplitRule::Model(m) => Ok(match m.model.score(sample, schema)? {
            Some(p) => Route::from_left(p >= 0.5),
            None => Route::MissingInput,
        }),
        SplitRule::TreeRef(t) => {
            if stack.iter().any(|id| id == &t.tree_id) {
                let mut chain = stack.clone();
                chain.push(t.tree_id.clone());
                return Err(Error::CyclicReference(chain));
            }
            let tree = lib.resolve_tree(&t.tree_id).ok_or_else(|| Error::UnresolvableTreeRef(t.tree_id.clone()))?;
            stack.push(tree.id.clone());
            let prediction = predict_with_stack(&tree.root, sample, schema, lib, stack);
            stack.pop();
            Ok(Route::from_left(prediction?.label.is_positive()))
        }
        SplitRule::Visual(v) => {
            let x = schema.number(sample, &v.feature_x)?;
            let y = schema.number(sample, &v.feature_y)?;
            Ok(match (x, y) {
                (Some(x), Some(y)) => Route::from_left(in_any(&v.polygons, Point::new(x, y))),
                _ => Route::MissingInput,
            })
        }
    }
}
