use std::collections::HashSet;

use super::rule::{FeatureTest, SplitRule};
use super::{DecisionTree, Node, TreeResolver};
use crate::dataset::{FeatureKind, Schema};
use crate::error::ValidationIssue;

struct Validator<'a> {
    schema: &'a Schema,
    lib: &'a dyn TreeResolver,
    stack: Vec<String>,
    done: HashSet<String>,
    issues: Vec<ValidationIssue>,
}

/// Checks every rule (including those of referenced trees, transitively)
/// against `schema`, and the reference graph for cycles.
///
/// All problems are collected rather than stopping at the first.
pub fn validate_tree(tree: &DecisionTree, schema: &Schema, lib: &dyn TreeResolver) -> Result<(), Vec<ValidationIssue>> {
    let mut v = Validator { schema, lib, stack: vec![tree.id.clone()], done: HashSet::new(), issues: Vec::new() };
    if &tree.dataset_signature != schema.signature() {
        v.issues.push(ValidationIssue::SignatureMismatch { tree_id: tree.id.clone(), path: "$".into() });
    }
    v.node(&tree.root, "$.root".to_owned());
    let mut seen = Vec::new();
    v.issues.retain(|i| {
        if seen.contains(i) {
            false
        } else {
            seen.push(i.clone());
            true
        }
    });
    if v.issues.is_empty() {
        Ok(())
    } else {
        Err(v.issues)
    }
}

impl Validator<'_> {
    fn node(&mut self, node: &Node, path: String) {
        if let Node::Split(s) = node {
            self.rule(&s.rule, &format!("{path}.rule"));
            self.node(&s.left, format!("{path}.left"));
            self.node(&s.right, format!("{path}.right"));
        }
    }

    fn expect_kind(&mut self, feature: &str, kind: FeatureKind, path: &str) -> bool {
        match self.schema.feature(feature) {
            None => {
                self.issues
                    .push(ValidationIssue::UnknownFeature { feature: feature.to_owned(), path: path.to_owned() });
                false
            }
            Some(f) if f.kind != kind => {
                self.issues.push(ValidationIssue::KindMismatch {
                    feature: feature.to_owned(),
                    expected: kind.as_str(),
                    path: path.to_owned(),
                });
                false
            }
            Some(_) => true,
        }
    }

    fn rule(&mut self, rule: &SplitRule, path: &str) {
        match rule {
            SplitRule::Feature(f) => match &f.test {
                FeatureTest::Threshold(_) => {
                    self.expect_kind(&f.feature, FeatureKind::Numeric, path);
                }
                FeatureTest::Categories(left) => {
                    if self.expect_kind(&f.feature, FeatureKind::Categorical, path) {
                        let known = &self.schema.feature(&f.feature).expect("checked").categories;
                        let reason = if let Some(c) = left.iter().find(|c| !known.contains(c)) {
                            Some(format!("include unknown category `{c}`"))
                        } else if known.iter().all(|k| left.contains(k)) {
                            Some("cover every category, so nothing can go right".to_owned())
                        } else {
                            None
                        };
                        if let Some(reason) = reason {
                            self.issues.push(ValidationIssue::InvalidCategories {
                                feature: f.feature.clone(),
                                reason,
                                path: path.to_owned(),
                            });
                        }
                    }
                }
            },
            SplitRule::Custom(c) => {
                for name in c.feature.weights.keys() {
                    self.expect_kind(name, FeatureKind::Numeric, path);
                }
            }
            SplitRule::Model(m) => {
                for name in &m.features {
                    self.expect_kind(name, FeatureKind::Numeric, path);
                }
            }
            SplitRule::Visual(v) => {
                self.expect_kind(&v.feature_x, FeatureKind::Numeric, path);
                self.expect_kind(&v.feature_y, FeatureKind::Numeric, path);
            }
            SplitRule::TreeRef(t) => self.tree_ref(&t.tree_id, path),
        }
    }

    fn tree_ref(&mut self, id: &str, path: &str) {
        if let Some(pos) = self.stack.iter().position(|s| s == id) {
            let mut chain = self.stack[pos..].to_vec();
            chain.push(id.to_owned());
            self.issues.push(ValidationIssue::CyclicReference { chain });
            return;
        }
        if self.done.contains(id) {
            return;
        }
        let Some(tree) = self.lib.resolve_tree(id) else {
            self.issues.push(ValidationIssue::UnresolvableTreeRef { tree_id: id.to_owned(), path: path.to_owned() });
            return;
        };
        if &tree.dataset_signature != self.schema.signature() {
            self.issues.push(ValidationIssue::SignatureMismatch { tree_id: id.to_owned(), path: path.to_owned() });
        }
        self.stack.push(id.to_owned());
        self.node(&tree.root, format!("trees[{id}].root"));
        self.stack.pop();
        self.done.insert(id.to_owned());
    }
}
