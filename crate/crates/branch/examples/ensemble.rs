//! Majority vote over several library trees that share a dataset signature.

use branch::{demo, ops};
use branch_core::dataset::Label;
use branch_core::eval::EvalMode;
use branch_core::store::{Store, Visibility};
use branch_core::tree::{DecisionTree, Node, SplitRule};

const TOKEN: &str = "ensemble-demo-token-0001";

fn stump(sig: &branch_core::dataset::Signature, feature: &str, t: f64, below: Label) -> DecisionTree {
    let root = Node::split(SplitRule::threshold(feature, t), Node::leaf(below), Node::leaf(below.flip()));
    DecisionTree::new("", format!("{feature} < {t}"), sig.clone(), root)
}

fn main() -> branch_core::Result<()> {
    let store = Store::in_memory();
    let rec = store.insert_dataset(demo::walkthrough_dataset(), "")?;
    let sig = rec.dataset.signature().clone();
    let mode = EvalMode::PercentageSplit { fraction: 0.66, seed: 11 };

    let mut ids = Vec::new();
    for tree in [
        stump(&sig, "PSRC1", 5.0, Label::Negative),
        stump(&sig, "MKI67", 4.0, Label::Negative),
        stump(&sig, "ESR1", 5.0, Label::Positive),
        demo::walkthrough_tree(&sig),
    ] {
        let saved = store.create_tree(tree, TOKEN, Visibility::Public)?;
        let alone = ops::evaluate_in_store(&store.snapshot(), &saved.tree, None, &mode)?;
        println!("{:<22} accuracy {:.3}  AUC {:.3}", saved.tree.name, alone.accuracy, alone.auc);
        ids.push(saved.id().to_owned());
    }
    let joint = ops::ensemble_in_store(&store.snapshot(), &ids, None, &mode, Some(TOKEN))?;
    println!("{:<22} accuracy {:.3}  AUC {:.3}", "majority vote", joint.accuracy, joint.auc);
    Ok(())
}
