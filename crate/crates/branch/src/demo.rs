//! Built-in demo material: a small majority-class fixture and a synthetic
//! expression-style walkthrough dataset with a matching example tree.

use branch_core::dataset::{parse_csv, Dataset, Label, Signature};
use branch_core::rng::SplitMix64;
use branch_core::tree::{DecisionTree, Node, SplitRule};

pub const CLASS_COLUMN: &str = "outcome";
pub const POSITIVE: &str = "relapse";
pub const NEGATIVE: &str = "no_relapse";

/// Ten samples, seven positive: a single-leaf tree scores accuracy 0.7.
pub fn majority_csv() -> String {
    let mut out = format!("score,{CLASS_COLUMN}\n");
    for i in 0..10 {
        let class = if i < 7 { POSITIVE } else { NEGATIVE };
        out.push_str(&format!("{i},{class}\n"));
    }
    out
}

pub fn majority_dataset() -> Dataset {
    parse_csv(&majority_csv(), CLASS_COLUMN, POSITIVE).expect("fixture parses")
}

/// A bare-leaf tree over the majority fixture.
pub fn majority_tree(signature: &Signature) -> DecisionTree {
    DecisionTree::new("majority", "majority leaf", signature.clone(), Node::leaf(Label::Positive))
}

const GENES: [&str; 5] = ["PSRC1", "ESR1", "ERBB2", "MKI67", "AURKA"];

fn normal(rng: &mut SplitMix64) -> f64 {
    // Box–Muller on two uniforms in (0, 1].
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Synthetic cohort of `n` samples: five expression features, a tumour grade
/// and a relapse outcome driven mostly by PSRC1, MKI67 and grade. About 3% of
/// cells are missing.
pub fn walkthrough_csv(n: usize, seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let mut out = format!("{},grade,{CLASS_COLUMN}\n", GENES.join(","));
    for _ in 0..n {
        let grade = 1 + rng.below(3) as i32;
        let risk = normal(&mut rng);
        let mut values = [
            5.0 + 1.2 * risk + 0.6 * normal(&mut rng),
            7.0 - 0.8 * risk + 0.9 * normal(&mut rng),
            3.0 + 1.0 * normal(&mut rng),
            4.0 + 0.9 * risk + 0.2 * grade as f64 + 0.7 * normal(&mut rng),
            2.5 + 0.5 * risk + 0.8 * normal(&mut rng),
        ];
        for v in &mut values {
            *v = round2(*v);
        }
        let logit = 1.6 * risk + 0.7 * (grade as f64 - 2.0) + 0.4 * normal(&mut rng);
        let class = if logit > 0.0 { POSITIVE } else { NEGATIVE };
        let mut cells: Vec<String> =
            values.iter().map(|v| if rng.below(33) == 0 { "NA".to_owned() } else { v.to_string() }).collect();
        cells.push(format!("G{grade}"));
        cells.push(class.to_owned());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn walkthrough_dataset() -> Dataset {
    let mut d = parse_csv(&walkthrough_csv(120, 2013), CLASS_COLUMN, POSITIVE).expect("synthetic data parses");
    d.name = "synthetic cohort".into();
    d
}

/// Depth-3 example: PSRC1 low/high, then grade and MKI67.
pub fn walkthrough_tree(signature: &Signature) -> DecisionTree {
    let leaf = Node::leaf;
    let root = Node::split(
        SplitRule::threshold("PSRC1", 5.0),
        Node::split(
            SplitRule::categories("grade", &["G1", "G2"]),
            leaf(Label::Negative),
            Node::split(SplitRule::threshold("MKI67", 4.5), leaf(Label::Negative), leaf(Label::Positive)),
        ),
        Node::split(SplitRule::threshold("MKI67", 3.8), leaf(Label::Negative), leaf(Label::Positive)),
    );
    DecisionTree::new("walkthrough", "PSRC1 / grade / MKI67", signature.clone(), root)
}
