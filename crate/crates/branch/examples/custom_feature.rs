//! Register a named linear combination of genes (in the spirit of a
//! published multi-gene score) once per dataset signature, then split on it.

use std::collections::BTreeMap;

use branch::demo;
use branch_core::dataset::{Label, NoDatasets};
use branch_core::eval::{evaluate, EvalMode};
use branch_core::store::Store;
use branch_core::tree::{CustomFeature, CustomRule, DecisionTree, Node, SplitRule};

fn main() -> branch_core::Result<()> {
    let store = Store::in_memory();
    let rec = store.insert_dataset(demo::walkthrough_dataset(), "synthetic cohort")?;
    let sig = rec.dataset.signature().clone();

    let score = CustomFeature {
        name: Some("risk".into()),
        weights: BTreeMap::from([("MKI67".into(), 0.47), ("AURKA".into(), 0.32), ("ESR1".into(), -0.34)]),
        offset: 1.0,
    };
    store.save_custom_feature(&sig, score)?;

    let snap = store.snapshot();
    let saved = snap.custom_features(&sig);
    println!(
        "custom features for this signature: {:?}",
        saved.iter().map(|f| f.name.as_deref().unwrap_or("")).collect::<Vec<_>>()
    );

    let data = &rec.dataset;
    let s = &data.samples()[0];
    println!("risk(sample 0) = {:?}", saved[0].evaluate(s, data.schema())?);

    let rule = SplitRule::Custom(CustomRule { feature: saved[0].clone(), threshold: 2.0 });
    let tree = DecisionTree::new(
        "",
        "risk cut",
        sig,
        Node::split(rule, Node::leaf(Label::Negative), Node::leaf(Label::Positive)),
    );
    for mode in [EvalMode::TrainingSet, EvalMode::PercentageSplit { fraction: 0.66, seed: 1 }] {
        let r = evaluate(&tree, data, &mode, &*snap, &NoDatasets)?;
        println!("{mode:?}: accuracy {:.3}, AUC {:.3}", r.accuracy, r.auc);
    }
    Ok(())
}
