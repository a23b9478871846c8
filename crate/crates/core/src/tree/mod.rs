//! Decision trees built from five kinds of split rule.
//!
//! Every split sends a sample `Left` or `Right`. Left is the "low" side of a
//! threshold and the predicted-positive side of model and tree-reference
//! rules; a value equal to a threshold goes right.

mod codec;
pub mod geometry;
mod inline;
mod predict;
mod rule;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, Signature};

pub use self::codec::{rule_from_value, rule_to_value, tree_from_json, tree_from_value, tree_to_json, tree_to_value};
pub use self::geometry::{Point, Polygon};
pub use self::inline::inline_tree_refs;
pub use self::predict::{fit_leaf_stats, majority_label, predict, prior_label, Prediction};
pub use self::rule::{
    route, CustomFeature, CustomRule, FeatureRule, FeatureTest, ModelRule, Route, SplitRule, TreeRefRule, VisualRule,
};
pub use self::validate::validate_tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub label: Label,
    pub total: u64,
    pub positive: u64,
}

impl Leaf {
    pub fn new(label: Label) -> Leaf {
        Leaf { label, total: 0, positive: 0 }
    }

    /// Laplace-smoothed positive rate.
    pub fn score(&self) -> f64 {
        (self.positive as f64 + 1.0) / (self.total as f64 + 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub rule: SplitRule,
    pub left: Box<Node>,
    pub right: Box<Node>,
    /// Where samples with missing inputs go. `None` means the child with the
    /// larger training total, ties going left.
    pub missing: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split(Split),
    Leaf(Leaf),
}

impl Node {
    pub fn leaf(label: Label) -> Node {
        Node::Leaf(Leaf::new(label))
    }

    pub fn split(rule: SplitRule, left: Node, right: Node) -> Node {
        Node::Split(Split { rule, left: Box::new(left), right: Box::new(right), missing: None })
    }

    /// Sum of training totals over the leaves below this node.
    pub fn train_total(&self) -> u64 {
        match self {
            Node::Leaf(l) => l.total,
            Node::Split(s) => s.left.train_total() + s.right.train_total(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => s.left.leaf_count() + s.right.leaf_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    /// Leaves in left-first order with their `L`/`R` paths from this node.
    pub fn leaves(&self) -> Vec<(String, &Leaf)> {
        fn walk<'a>(node: &'a Node, path: &mut String, out: &mut Vec<(String, &'a Leaf)>) {
            match node {
                Node::Leaf(l) => out.push((path.clone(), l)),
                Node::Split(s) => {
                    path.push('L');
                    walk(&s.left, path, out);
                    path.pop();
                    path.push('R');
                    walk(&s.right, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut String::new(), &mut out);
        out
    }

    /// Every split rule in pre-order.
    pub fn rules(&self) -> Vec<&SplitRule> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if let Node::Split(s) = node {
                out.push(&s.rule);
                stack.push(&s.right);
                stack.push(&s.left);
            }
        }
        out
    }

    pub fn has_tree_refs(&self) -> bool {
        self.rules().iter().any(|r| matches!(r, SplitRule::TreeRef(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub id: String,
    pub name: String,
    pub dataset_signature: Signature,
    pub root: Node,
    pub created_at: Option<DateTime<Utc>>,
    pub modified_at: Option<DateTime<Utc>>,
}

impl DecisionTree {
    pub fn new(id: impl Into<String>, name: impl Into<String>, dataset_signature: Signature, root: Node) -> Self {
        DecisionTree { id: id.into(), name: name.into(), dataset_signature, root, created_at: None, modified_at: None }
    }

    /// Ids named by the tree's own `treeref` rules (not transitive).
    pub fn referenced_ids(&self) -> Vec<&str> {
        self.root
            .rules()
            .into_iter()
            .filter_map(|r| match r {
                SplitRule::TreeRef(t) => Some(t.tree_id.as_str()),
                _ => None,
            })
            .collect()
    }
}

/// Read-only lookup of library trees for `treeref` rules.
pub trait TreeResolver {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>>;
}

impl<T: TreeResolver + ?Sized> TreeResolver for &T {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        (**self).resolve_tree(id)
    }
}

impl TreeResolver for HashMap<String, Arc<DecisionTree>> {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        self.get(id).cloned()
    }
}

impl TreeResolver for BTreeMap<String, Arc<DecisionTree>> {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        self.get(id).cloned()
    }
}

/// Resolver with no trees; any `treeref` fails to resolve.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTrees;

impl TreeResolver for NoTrees {
    fn resolve_tree(&self, _id: &str) -> Option<Arc<DecisionTree>> {
        None
    }
}

/// Resolver that sees one extra tree on top of another resolver, used while
/// validating a tree that is not stored yet.
pub struct Overlay<'a, R: ?Sized> {
    pub tree: Arc<DecisionTree>,
    pub base: &'a R,
}

impl<R: TreeResolver + ?Sized> TreeResolver for Overlay<'_, R> {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        if id == self.tree.id {
            Some(self.tree.clone())
        } else {
            self.base.resolve_tree(id)
        }
    }
}
