//! The three evaluation protocols, and why training-set numbers mislead: a
//! tree refined until every leaf is pure is perfect on its own data and
//! near chance on held-out samples of a noise-only dataset.

use std::fmt::Write as _;

use branch::demo;
use branch_core::dataset::{parse_csv, Dataset, Label, NoDatasets, Sample};
use branch_core::eval::{evaluate, EvalMode};
use branch_core::rng::SplitMix64;
use branch_core::store::{DatasetImport, Store};
use branch_core::tree::{DecisionTree, NoTrees, Node, SplitRule};

fn refine(rows: &[&Sample], data: &Dataset, depth: usize) -> Node {
    let pos = rows.iter().filter(|s| s.label.is_positive()).count();
    if pos == 0 || pos == rows.len() {
        return Node::leaf(if pos > 0 { Label::Positive } else { Label::Negative });
    }
    let f = ["a", "b"][depth % 2];
    let mut xs: Vec<f64> = rows.iter().map(|s| data.schema().number(s, f).unwrap().unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    let t = (xs[xs.len() / 2 - 1] + xs[xs.len() / 2]) / 2.0;
    let (l, r): (Vec<&Sample>, Vec<&Sample>) =
        rows.iter().partition(|s| data.schema().number(s, f).unwrap().unwrap() < t);
    Node::split(SplitRule::threshold(f, t), refine(&l, data, depth + 1), refine(&r, data, depth + 1))
}

fn main() -> branch_core::Result<()> {
    // Held-out test set: imported together with the training file.
    let store = Store::in_memory();
    let rec = store.import_dataset(DatasetImport {
        name: "cohort".into(),
        csv: demo::walkthrough_csv(120, 2013),
        class_column: demo::CLASS_COLUMN.into(),
        positive_name: demo::POSITIVE.into(),
        companion_test_csv: Some(demo::walkthrough_csv(80, 99)),
        ..DatasetImport::default()
    })?;
    let snap = store.snapshot();
    let tree = demo::walkthrough_tree(rec.dataset.signature());
    let test_id = rec.companion_test_dataset_id.clone().expect("companion");
    for mode in [
        EvalMode::TrainingSet,
        EvalMode::TestSet { test_dataset_id: test_id },
        EvalMode::PercentageSplit { fraction: 0.66, seed: 7 },
    ] {
        let r = evaluate(&tree, &rec.dataset, &mode, &*snap, &*snap)?;
        let c = r.confusion;
        println!(
            "{:<60} acc {:.3}  AUC {:.3}  tp {} fp {} fn {} tn {}",
            format!("{mode:?}"),
            r.accuracy,
            r.auc,
            c.tp,
            c.fp,
            c.fn_,
            c.tn
        );
    }

    // Overfitting: 40 noise samples, labels unrelated to the features.
    let mut rng = SplitMix64::new(40);
    let mut csv = String::from("a,b,y\n");
    for i in 0..40 {
        let _ = writeln!(csv, "{},{},{}", rng.next_f64(), rng.next_f64(), if i % 2 == 0 { "p" } else { "n" });
    }
    let noise = parse_csv(&csv, "y", "p")?;
    let full = DecisionTree::new("", "pure leaves", noise.signature().clone(), refine(&noise.all(), &noise, 0));
    let train = evaluate(&full, &noise, &EvalMode::TrainingSet, &NoTrees, &NoDatasets)?;
    println!("\n{} leaves; training-set accuracy {:.2} ({:?})", full.root.leaf_count(), train.accuracy, train.warnings);
    for seed in 0..5 {
        let r = evaluate(&full, &noise, &EvalMode::PercentageSplit { fraction: 0.66, seed }, &NoTrees, &NoDatasets)?;
        println!("  split seed {seed}: accuracy {:.2}", r.accuracy);
    }
    Ok(())
}
