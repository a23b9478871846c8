//! A hand-drawn polygon split: fetch the scatter of two features, draw a
//! region, preview how every sample would route, then evaluate.

use branch::{demo, ops};
use branch_core::dataset::{Label, NoDatasets};
use branch_core::eval::{evaluate, EvalMode};
use branch_core::store::Store;
use branch_core::tree::{DecisionTree, Node, Point, Polygon, SplitRule, VisualRule};
use serde_json::json;

fn main() -> branch_core::Result<()> {
    let store = Store::in_memory();
    let rec = store.insert_dataset(demo::walkthrough_dataset(), "")?;
    let data = rec.dataset.clone();

    let scatter = ops::scatter_points(&data, "PSRC1", "MKI67")?;
    println!("{} plotted points", scatter["points"].as_array().map_or(0, Vec::len));

    // Lower-left region, plus a concave notch to show even-odd membership.
    let drawn = json!({
        "kind": "visual",
        "feature_x": "PSRC1",
        "feature_y": "MKI67",
        "polygons": [[[0.0, 0.0], [5.5, 0.0], [5.5, 4.0], [3.0, 2.5], [0.0, 4.5]]]
    });
    let preview = ops::route_preview(&store.snapshot(), &data, &drawn, None)?;
    println!("preview counts {}", preview["counts"]);

    let polygon = Polygon::new(
        [(0.0, 0.0), (5.5, 0.0), (5.5, 4.0), (3.0, 2.5), (0.0, 4.5)].iter().map(|&(x, y)| Point::new(x, y)).collect(),
    );
    let rule = SplitRule::Visual(VisualRule {
        feature_x: "PSRC1".into(),
        feature_y: "MKI67".into(),
        polygons: vec![polygon.clone()],
    });
    println!("(3, 2.5) is a vertex -> inside: {}", polygon.contains(Point::new(3.0, 2.5)));
    println!("(3, 3.5) sits in the notch -> inside: {}", polygon.contains(Point::new(3.0, 3.5)));

    let tree = DecisionTree::new(
        "",
        "drawn",
        data.signature().clone(),
        Node::split(rule, Node::leaf(Label::Negative), Node::leaf(Label::Positive)),
    );
    let r = evaluate(&tree, &data, &EvalMode::TrainingSet, &branch_core::tree::NoTrees, &NoDatasets)?;
    println!("accuracy {:.3}, AUC {:.3}", r.accuracy, r.auc);
    Ok(())
}
