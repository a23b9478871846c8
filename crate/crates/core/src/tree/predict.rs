use super::rule::{route_with_stack, Route};
use super::{DecisionTree, Direction, Leaf, Node, Split, TreeResolver};
use crate::dataset::{Label, Sample, Schema};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Smoothed positive rate of the reached leaf.
    pub score: f64,
    /// `L`/`R` steps from the root to the reached leaf.
    pub leaf_path: String,
}

/// Class with the larger count; ties go to positive.
pub fn prior_label(positive: usize, negative: usize) -> Label {
    if negative > positive {
        Label::Negative
    } else {
        Label::Positive
    }
}

/// Strict majority of a leaf's counts, falling back to `prior` on a tie or an
/// empty leaf.
pub fn majority_label(positive: u64, total: u64, prior: Label) -> Label {
    match (2 * positive).cmp(&total) {
        std::cmp::Ordering::Greater => Label::Positive,
        std::cmp::Ordering::Less if total > 0 => Label::Negative,
        _ => prior,
    }
}

fn missing_direction(split: &Split) -> Direction {
    split.missing.unwrap_or_else(|| {
        if split.left.train_total() >= split.right.train_total() {
            Direction::Left
        } else {
            Direction::Right
        }
    })
}

pub fn predict(tree: &DecisionTree, sample: &Sample, schema: &Schema, lib: &dyn TreeResolver) -> Result<Prediction> {
    let mut stack = vec![tree.id.clone()];
    predict_with_stack(&tree.root, sample, schema, lib, &mut stack)
}

pub(crate) fn predict_with_stack(
    root: &Node,
    sample: &Sample,
    schema: &Schema,
    lib: &dyn TreeResolver,
    stack: &mut Vec<String>,
) -> Result<Prediction> {
    let mut node = root;
    let mut path = String::new();
    loop {
        match node {
            Node::Leaf(leaf) => {
                return Ok(Prediction { label: leaf.label, score: leaf.score(), leaf_path: path });
            }
            Node::Split(split) => {
                let dir = match route_with_stack(&split.rule, sample, schema, lib, stack)? {
                    Route::Left => Direction::Left,
                    Route::Right => Direction::Right,
                    Route::MissingInput => missing_direction(split),
                };
                match dir {
                    Direction::Left => {
                        path.push('L');
                        node = &split.left;
                    }
                    Direction::Right => {
                        path.push('R');
                        node = &split.right;
                    }
                }
            }
        }
    }
}

/// Recomputes every leaf's counts and label from `train`.
///
/// Samples with missing inputs at a split follow the side that received more
/// of the samples with known values (ties left), or the split's explicit
/// missing direction. Leaf labels use strict majority, then the training
/// prior; unreached leaves get `(0, 0)` and the prior label.
pub fn fit_leaf_stats(
    tree: &DecisionTree,
    train: &[&Sample],
    schema: &Schema,
    lib: &dyn TreeResolver,
) -> Result<DecisionTree> {
    let (pos, neg) = class_counts_ref(train);
    let prior = prior_label(pos, neg);
    let mut stack = vec![tree.id.clone()];
    let root = fit_node(&tree.root, train.to_vec(), schema, lib, prior, &mut stack)?;
    Ok(DecisionTree { root, ..tree.clone() })
}

fn class_counts_ref(samples: &[&Sample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.label.is_positive()).count();
    (pos, samples.len() - pos)
}

fn fit_node(
    node: &Node,
    samples: Vec<&Sample>,
    schema: &Schema,
    lib: &dyn TreeResolver,
    prior: Label,
    stack: &mut Vec<String>,
) -> Result<Node> {
    match node {
        Node::Leaf(_) => {
            let total = samples.len() as u64;
            let positive = samples.iter().filter(|s| s.label.is_positive()).count() as u64;
            Ok(Node::Leaf(Leaf { label: majority_label(positive, total, prior), total, positive }))
        }
        Node::Split(split) => {
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut missing = Vec::new();
            for s in samples {
                match route_with_stack(&split.rule, s, schema, lib, stack)? {
                    Route::Left => left.push(s),
                    Route::Right => right.push(s),
                    Route::MissingInput => missing.push(s),
                }
            }
            let dir =
                split.missing.unwrap_or(if left.len() >= right.len() { Direction::Left } else { Direction::Right });
            match dir {
                Direction::Left => left.extend(missing),
                Direction::Right => right.extend(missing),
            }
            Ok(Node::Split(Split {
                rule: split.rule.clone(),
                left: Box::new(fit_node(&split.left, left, schema, lib, prior, stack)?),
                right: Box::new(fit_node(&split.right, right, schema, lib, prior, stack)?),
                missing: split.missing,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_csv;
    use crate::tree::{NoTrees, SplitRule};

    fn tree(root: Node) -> DecisionTree {
        DecisionTree::new("t", "t", crate::dataset::Signature("sig".into()), root)
    }

    fn leaf(label: Label, total: u64, positive: u64) -> Node {
        Node::Leaf(Leaf { label, total, positive })
    }

    #[test]
    fn bare_leaf_prediction() {
        let d = parse_csv("x,c\n1,p\n2,n\n", "c", "p").unwrap();
        let t = tree(leaf(Label::Positive, 10, 8));
        let p = predict(&t, &d.samples()[0], d.schema(), &NoTrees).unwrap();
        assert_eq!(p.label, Label::Positive);
        assert_eq!(p.score, 0.75);
        assert_eq!(p.leaf_path, "");
    }

    #[test]
    fn routed_leaf_prediction() {
        let d = parse_csv("x,c\n1,p\n9,n\n", "c", "p").unwrap();
        let t =
            tree(Node::split(SplitRule::threshold("x", 5.0), leaf(Label::Negative, 5, 0), leaf(Label::Positive, 3, 3)));
        let p = predict(&t, &d.samples()[0], d.schema(), &NoTrees).unwrap();
        assert_eq!((p.label, p.score, p.leaf_path.as_str()), (Label::Negative, 1.0 / 7.0, "L"));
    }

    #[test]
    fn missing_follows_heavier_child() {
        let d = parse_csv("x,c\nNA,p\n9,n\n", "c", "p").unwrap();
        let t = tree(Node::split(
            SplitRule::threshold("x", 5.0),
            leaf(Label::Negative, 3, 1),
            leaf(Label::Positive, 10, 7),
        ));
        assert_eq!(predict(&t, &d.samples()[0], d.schema(), &NoTrees).unwrap().leaf_path, "R");
        let t = tree(Node::split(
            SplitRule::threshold("x", 5.0),
            leaf(Label::Negative, 10, 1),
            leaf(Label::Positive, 3, 3),
        ));
        assert_eq!(predict(&t, &d.samples()[0], d.schema(), &NoTrees).unwrap().leaf_path, "L");
        let t =
            tree(Node::split(SplitRule::threshold("x", 5.0), leaf(Label::Negative, 4, 1), leaf(Label::Positive, 4, 3)));
        assert_eq!(predict(&t, &d.samples()[0], d.schema(), &NoTrees).unwrap().leaf_path, "L");
    }

    #[test]
    fn fit_perfect_separation() {
        let d = parse_csv("x,c\n1,n\n2,n\n3,n\n4,n\n6,p\n7,p\n8,p\n9,p\n", "c", "p").unwrap();
        let t =
            tree(Node::split(SplitRule::threshold("x", 5.0), Node::leaf(Label::Positive), Node::leaf(Label::Positive)));
        let rows: Vec<&Sample> = d.samples().iter().collect();
        let fitted = fit_leaf_stats(&t, &rows, d.schema(), &NoTrees).unwrap();
        let leaves: Vec<_> = fitted.root.leaves().into_iter().map(|(_, l)| l.clone()).collect();
        assert_eq!(leaves[0], Leaf { label: Label::Negative, total: 4, positive: 0 });
        assert_eq!(leaves[1], Leaf { label: Label::Positive, total: 4, positive: 4 });
    }

    #[test]
    fn tie_and_empty_leaves_use_prior() {
        // 7 positive / 3 negative overall; the left leaf gets 2 + 2.
        let d = parse_csv("x,c\n1,p\n1,p\n1,n\n1,n\n9,p\n9,p\n9,p\n9,p\n9,p\n9,n\n", "c", "p").unwrap();
        let t = tree(Node::split(
            SplitRule::threshold("x", 5.0),
            Node::leaf(Label::Negative),
            Node::split(SplitRule::threshold("x", 100.0), Node::leaf(Label::Negative), Node::leaf(Label::Negative)),
        ));
        let rows: Vec<&Sample> = d.samples().iter().collect();
        let fitted = fit_leaf_stats(&t, &rows, d.schema(), &NoTrees).unwrap();
        let leaves: Vec<_> = fitted.root.leaves().into_iter().map(|(p, l)| (p, l.clone())).collect();
        assert_eq!(leaves[0].1, Leaf { label: Label::Positive, total: 4, positive: 2 });
        assert_eq!(leaves[2], ("RR".to_string(), Leaf { label: Label::Positive, total: 0, positive: 0 }));
    }

    #[test]
    fn fitting_and_prediction_agree_on_missing() {
        let d = parse_csv("x,c\n1,n\nNA,p\n9,p\n8,p\nNA,n\n", "c", "p").unwrap();
        let t =
            tree(Node::split(SplitRule::threshold("x", 5.0), Node::leaf(Label::Negative), Node::leaf(Label::Negative)));
        let rows: Vec<&Sample> = d.samples().iter().collect();
        let fitted = fit_leaf_stats(&t, &rows, d.schema(), &NoTrees).unwrap();
        let leaves = fitted.root.leaves();
        assert_eq!((leaves[0].1.total, leaves[1].1.total), (1, 4));
        assert_eq!(predict(&fitted, &d.samples()[1], d.schema(), &NoTrees).unwrap().leaf_path, "R");
    }

    #[test]
    fn majority_rule() {
        assert_eq!(majority_label(3, 5, Label::Negative), Label::Positive);
        assert_eq!(majority_label(2, 5, Label::Positive), Label::Negative);
        assert_eq!(majority_label(2, 4, Label::Negative), Label::Negative);
        assert_eq!(majority_label(0, 0, Label::Positive), Label::Positive);
        assert_eq!(prior_label(5, 5), Label::Positive);
        assert_eq!(prior_label(3, 7), Label::Negative);
    }
}
