//! Seeded random datasets and trees, for property checks, benchmarks and
//! demos. Everything here is a pure function of the [`SplitMix64`] state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dataset::{parse_csv, Dataset, FeatureKind, Label};
use crate::rng::SplitMix64;
use crate::tree::{
    CustomFeature, CustomRule, DecisionTree, Direction, FeatureRule, FeatureTest, Leaf, Node, Point, Polygon, Split,
    SplitRule, TreeRefRule, VisualRule,
};

pub const CLASS_COLUMN: &str = "class";
pub const POSITIVE: &str = "yes";
pub const NEGATIVE: &str = "no";
pub const TIERS: [&str; 3] = ["a", "b", "c"];

/// Shape of a generated dataset.
#[derive(Debug, Clone, Copy)]
pub struct DataShape {
    pub samples: usize,
    /// Numeric columns `x0..`; at least two so visual rules have a plane.
    pub numeric: usize,
    /// Adds a categorical column `tier` over [`TIERS`].
    pub categorical: bool,
    /// Per-cell probability of `NA`.
    pub missing_rate: f64,
    /// Probability that a label ignores the signal in `x0 + x1`.
    pub noise: f64,
}

impl Default for DataShape {
    fn default() -> Self {
        DataShape { samples: 60, numeric: 3, categorical: true, missing_rate: 0.05, noise: 0.2 }
    }
}

fn pick<'a, T>(rng: &mut SplitMix64, items: &'a [T]) -> &'a T {
    &items[rng.below(items.len() as u64) as usize]
}

/// CSV text for a dataset of the given shape. Numeric values lie on a
/// 0.5 grid in `[0, 10]`, so ties are common. At least three rows; the first two are one
/// positive and one negative sample, so both classes always occur.
pub fn random_csv(rng: &mut SplitMix64, shape: DataShape) -> String {
    let numeric = shape.numeric.max(2);
    let mut out = String::new();
    for i in 0..numeric {
        let _ = write!(out, "x{i},");
    }
    if shape.categorical {
        out.push_str("tier,");
    }
    out.push_str(CLASS_COLUMN);
    out.push('\n');
    for row in 0..shape.samples.max(3) {
        let xs: Vec<f64> = (0..numeric).map(|_| rng.below(21) as f64 / 2.0).collect();
        let signal = xs[0] + xs[1] >= 10.0;
        let label = match row {
            0 => true,
            1 => false,
            _ if rng.next_f64() < shape.noise => rng.below(2) == 0,
            _ => signal,
        };
        for x in xs {
            if row > 1 && rng.next_f64() < shape.missing_rate {
                out.push_str("NA,");
            } else {
                let _ = write!(out, "{x},");
            }
        }
        if shape.categorical {
            // the first rows cycle through every tier so all three occur
            let tier = if row < TIERS.len() { TIERS[row] } else { *pick(rng, &TIERS) };
            let _ = write!(out, "{tier},");
        }
        out.push_str(if label { POSITIVE } else { NEGATIVE });
        out.push('\n');
    }
    out
}

pub fn random_dataset(rng: &mut SplitMix64, shape: DataShape) -> Dataset {
    parse_csv(&random_csv(rng, shape), CLASS_COLUMN, POSITIVE).expect("generated CSV parses")
}

/// Rule mix for [`random_tree`].
#[derive(Debug, Clone, Default)]
pub struct TreeShape {
    pub max_depth: usize,
    /// Ids that `treeref` rules may point at.
    pub refs: Vec<String>,
    /// Allow custom-feature and visual rules besides plain feature tests.
    pub rich: bool,
}

/// A random well-formed tree over `dataset`'s schema with unfitted leaves.
pub fn random_tree(rng: &mut SplitMix64, dataset: &Dataset, id: &str, shape: &TreeShape) -> DecisionTree {
    let root = random_node(rng, dataset, shape, shape.max_depth);
    DecisionTree::new(id, id, dataset.signature().clone(), root)
}

fn random_leaf(rng: &mut SplitMix64) -> Node {
    Node::Leaf(Leaf::new(if rng.below(2) == 0 { Label::Positive } else { Label::Negative }))
}

fn random_node(rng: &mut SplitMix64, dataset: &Dataset, shape: &TreeShape, depth: usize) -> Node {
    if depth == 0 || rng.below(4) == 0 {
        return random_leaf(rng);
    }
    let rule = random_rule(rng, dataset, shape);
    let missing = match rng.below(3) {
        0 => None,
        1 => Some(Direction::Left),
        _ => Some(Direction::Right),
    };
    let left = random_node(rng, dataset, shape, depth - 1);
    let right = random_node(rng, dataset, shape, depth - 1);
    Node::Split(Split { rule, left: Box::new(left), right: Box::new(right), missing })
}

/// One random rule valid for `dataset`.
pub fn random_rule(rng: &mut SplitMix64, dataset: &Dataset, shape: &TreeShape) -> SplitRule {
    let numeric: Vec<&str> =
        dataset.features().iter().filter(|f| f.kind == FeatureKind::Numeric).map(|f| f.name.as_str()).collect();
    let categorical: Vec<_> = dataset.features().iter().filter(|f| f.kind == FeatureKind::Categorical).collect();
    let mut kinds = vec![0];
    if !categorical.is_empty() {
        kinds.push(1);
    }
    if shape.rich {
        kinds.extend([2, 3]);
    }
    if !shape.refs.is_empty() {
        kinds.push(4);
    }
    match *pick(rng, &kinds) {
        0 => SplitRule::threshold(pick(rng, &numeric), rng.below(21) as f64 / 2.0),
        1 => {
            let f = *pick(rng, &categorical);
            let mut cats = f.categories.clone();
            rng.shuffle(&mut cats);
            cats.truncate(1 + rng.below(cats.len() as u64 - 1) as usize);
            SplitRule::Feature(FeatureRule { feature: f.name.clone(), test: FeatureTest::Categories(cats) })
        }
        2 => {
            let mut weights = BTreeMap::new();
            for _ in 0..2 {
                weights.insert(pick(rng, &numeric).to_string(), rng.next_f64() * 4.0 - 2.0);
            }
            let feature = CustomFeature { name: None, weights, offset: rng.next_f64() * 2.0 - 1.0 };
            SplitRule::Custom(CustomRule { feature, threshold: rng.next_f64() * 10.0 - 5.0 })
        }
        3 => SplitRule::Visual(VisualRule {
            feature_x: numeric[0].to_owned(),
            feature_y: numeric[1].to_owned(),
            polygons: (0..1 + rng.below(2)).map(|_| random_polygon(rng, 0.0, 10.0)).collect(),
        }),
        _ => SplitRule::TreeRef(TreeRefRule { tree_id: pick(rng, &shape.refs).clone() }),
    }
}

/// 3–7 vertices in `[lo, hi]²`, on a 0.5 grid about a third of the time so
/// vertices and edges coincide with grid-valued samples. Vertices are
/// not reordered, so the polygon may self-intersect.
pub fn random_polygon(rng: &mut SplitMix64, lo: f64, hi: f64) -> Polygon {
    let n = 3 + rng.below(5) as usize;
    let grid = rng.below(3) == 0;
    let coord = |rng: &mut SplitMix64| {
        let t = rng.next_f64();
        let v = lo + t * (hi - lo);
        if grid {
            (v * 2.0).round() / 2.0
        } else {
            v
        }
    };
    Polygon::new((0..n).map(|_| Point::new(coord(rng), coord(rng))).collect())
}
