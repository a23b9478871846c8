//! Train both learners on a feature subset, look at the logistic-regression
//! loss curve, and embed the result as a model split.

use branch::demo;
use branch_core::dataset::{Label, NoDatasets};
use branch_core::eval::{evaluate, EvalMode};
use branch_core::learners::{train, train_logreg_traced, LearnerSpec, TrainedModel};
use branch_core::tree::{DecisionTree, ModelRule, NoTrees, Node, SplitRule};

fn main() -> branch_core::Result<()> {
    let data = demo::walkthrough_dataset();
    let rows = data.all();

    if let TrainedModel::Stump(s) = train(&rows, data.schema(), &LearnerSpec::stump(&["PSRC1", "MKI67", "ESR1"]))? {
        println!("stump: {} < {:.3}  gain {:.4} bits", s.feature, s.threshold, s.gain);
    }

    let spec = LearnerSpec::logreg(&["PSRC1", "MKI67"], 0.5, 200, 0.01);
    let fit = train_logreg_traced(&rows, data.schema(), &spec)?;
    let h = &fit.loss_history;
    println!("logreg loss: {:.4} -> {:.4} -> {:.4}", h[0], h[h.len() / 2], h[h.len() - 1]);

    // Samples with p >= 0.5 go left.
    let rule = SplitRule::Model(ModelRule { model: fit.model.clone(), features: spec.features.clone() });
    let tree = DecisionTree::new(
        "",
        "model",
        data.signature().clone(),
        Node::split(rule, Node::leaf(Label::Positive), Node::leaf(Label::Negative)),
    );
    let r = evaluate(&tree, &data, &EvalMode::PercentageSplit { fraction: 0.66, seed: 3 }, &NoTrees, &NoDatasets)?;
    println!("model node on held-out third: accuracy {:.3}, AUC {:.3}", r.accuracy, r.auc);
    println!("{}", serde_json::to_string_pretty(&fit.model.to_json()).expect("json"));
    Ok(())
}
