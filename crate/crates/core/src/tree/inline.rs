use super::rule::SplitRule;
use super::{DecisionTree, Direction, Node, Split, TreeResolver};
use crate::error::{Error, Result};

/// Replaces every `treeref` split with a copy of the referenced tree whose
/// positive leaves continue into the original left child and negative leaves
/// into the right child.
///
/// Each split of the result carries an explicit missing-value direction taken
/// from the original structure, since grafting changes subtree totals. A tree
/// without references is returned unchanged.
pub fn inline_tree_refs(tree: &DecisionTree, lib: &dyn TreeResolver) -> Result<DecisionTree> {
    if !tree.root.has_tree_refs() {
        return Ok(tree.clone());
    }
    let mut stack = vec![tree.id.clone()];
    let root = expand(&tree.root, lib, &mut stack)?;
    Ok(DecisionTree { root, ..tree.clone() })
}

fn expand(node: &Node, lib: &dyn TreeResolver, stack: &mut Vec<String>) -> Result<Node> {
    let split = match node {
        Node::Leaf(_) => return Ok(node.clone()),
        Node::Split(s) => s,
    };
    let left = expand(&split.left, lib, stack)?;
    let right = expand(&split.right, lib, stack)?;
    if let SplitRule::TreeRef(r) = &split.rule {
        if stack.contains(&r.tree_id) {
            let mut chain = stack.clone();
            chain.push(r.tree_id.clone());
            return Err(Error::CyclicReference(chain));
        }
        let target = lib.resolve_tree(&r.tree_id).ok_or_else(|| Error::UnresolvableTreeRef(r.tree_id.clone()))?;
        stack.push(r.tree_id.clone());
        let embedded = expand(&target.root, lib, stack);
        stack.pop();
        return Ok(graft(embedded?, &left, &right));
    }
    let missing = split.missing.unwrap_or(if split.left.train_total() >= split.right.train_total() {
        Direction::Left
    } else {
        Direction::Right
    });
    Ok(Node::Split(Split {
        rule: split.rule.clone(),
        left: Box::new(left),
        right: Box::new(right),
        missing: Some(missing),
    }))
}

fn graft(node: Node, on_positive: &Node, on_negative: &Node) -> Node {
    match node {
        Node::Leaf(l) if l.label.is_positive() => on_positive.clone(),
        Node::Leaf(_) => on_negative.clone(),
        Node::Split(s) => Node::Split(Split {
            rule: s.rule,
            left: Box::new(graft(*s.left, on_positive, on_negative)),
            right: Box::new(graft(*s.right, on_positive, on_negative)),
            missing: s.missing,
        }),
    }
}
