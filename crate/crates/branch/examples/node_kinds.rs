//! One tree using all five split kinds: a feature threshold, a custom
//! linear feature, an embedded stump, a reference to another tree, and a
//! drawn polygon. Routing conventions: values below a threshold go left,
//! category members go left, p >= 0.5 goes left, a positive referenced
//! prediction goes left, and points inside (or on) a polygon go left.

use std::collections::BTreeMap;
use std::sync::Arc;

use branch::demo;
use branch_core::dataset::{Label, NoDatasets};
use branch_core::eval::{evaluate, EvalMode};
use branch_core::learners::{train, LearnerSpec};
use branch_core::tree::{
    tree_to_json, CustomFeature, CustomRule, DecisionTree, ModelRule, Node, Point, Polygon, SplitRule, TreeRefRule,
    VisualRule,
};

fn main() -> branch_core::Result<()> {
    let data = demo::walkthrough_dataset();
    let sig = data.signature().clone();
    let leaf = Node::leaf;

    // A small library tree to delegate to.
    let grade = DecisionTree::new(
        "grade-only",
        "grade only",
        sig.clone(),
        Node::split(SplitRule::categories("grade", &["G3"]), leaf(Label::Positive), leaf(Label::Negative)),
    );
    let lib = BTreeMap::from([(grade.id.clone(), Arc::new(grade))]);

    let proliferation = CustomFeature {
        name: Some("proliferation".into()),
        weights: BTreeMap::from([("MKI67".into(), 0.6), ("AURKA".into(), 0.4)]),
        offset: 0.0,
    };
    let stump = train(&data.all(), data.schema(), &LearnerSpec::stump(&["ERBB2", "ESR1"]))?;
    let polygon =
        Polygon::new(vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(5.0, 5.0), Point::new(0.0, 5.0)]);

    let root = Node::split(
        SplitRule::threshold("PSRC1", 5.0),
        Node::split(
            SplitRule::Custom(CustomRule { feature: proliferation, threshold: 4.2 }),
            Node::split(
                SplitRule::Visual(VisualRule {
                    feature_x: "ESR1".into(),
                    feature_y: "ERBB2".into(),
                    polygons: vec![polygon],
                }),
                leaf(Label::Negative),
                leaf(Label::Positive),
            ),
            leaf(Label::Positive),
        ),
        Node::split(
            SplitRule::Model(ModelRule { model: stump, features: vec!["ERBB2".into(), "ESR1".into()] }),
            Node::split(
                SplitRule::TreeRef(TreeRefRule { tree_id: "grade-only".into() }),
                leaf(Label::Positive),
                leaf(Label::Negative),
            ),
            leaf(Label::Negative),
        ),
    );
    let tree = DecisionTree::new("five-kinds", "five kinds", sig, root);
    for rule in tree.root.rules() {
        println!("{:<8} {}", rule.kind(), rule.summary());
    }

    let report = evaluate(&tree, &data, &EvalMode::PercentageSplit { fraction: 0.66, seed: 7 }, &lib, &NoDatasets)?;
    println!("split accuracy {:.3}, AUC {:.3}", report.accuracy, report.auc);
    println!("document is {} bytes of canonical JSON", tree_to_json(&tree).len());
    Ok(())
}
