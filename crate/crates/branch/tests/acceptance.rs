//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero when
//! any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::json;

use branch::demo;
use branch_core::dataset::{parse_csv, percentage_split, Dataset, Label, NoDatasets, Sample};
use branch_core::eval::{auc, evaluate, EvalMode};
use branch_core::learners::{objective, train, train_stump, LearnerSpec, TrainedModel};
use branch_core::rng::SplitMix64;
use branch_core::store::{DatasetImport, Store};
use branch_core::synth::{self, random_dataset, random_polygon, random_tree, DataShape, TreeShape};
use branch_core::tree::{
    fit_leaf_stats, inline_tree_refs, predict, route, tree_to_json, tree_to_value, DecisionTree, FeatureRule,
    FeatureTest, NoTrees, Node, Point, Polygon, Route, Split, SplitRule, TreeRefRule, VisualRule,
};

use common::{ALICE, BOB};

const AUC_TOLERANCE: f64 = 1e-12;
const AUC_BUDGET: Duration = Duration::from_secs(5);
const STUMP_GAIN_TOLERANCE: f64 = 1e-12;
const GRADIENT_TOLERANCE: f64 = 1e-5;
const GRADIENT_STEP: f64 = 1e-5;
/// Probes closer than this to an edge (but not on it) are skipped by the
/// polygon oracle, where rounding decides membership either way.
const BOUNDARY_BAND: f64 = 1e-9;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn label(positive: bool) -> Label {
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

// ---------------------------------------------------------------- AUC

/// 1000 instances, n in 2..=50, scores on a 6-value grid so ties abound.
fn auc_corpus() -> Vec<(Vec<f64>, Vec<Label>)> {
    let mut rng = SplitMix64::new(0xA0C);
    let mut out = Vec::new();
    while out.len() < 1000 {
        let n = 2 + rng.below(49) as usize;
        let scores: Vec<f64> = (0..n).map(|_| rng.below(6) as f64 / 5.0).collect();
        let labels: Vec<Label> = (0..n).map(|_| label(rng.below(2) == 0)).collect();
        if labels.iter().any(|l| l.is_positive()) && labels.iter().any(|l| !l.is_positive()) {
            out.push((scores, labels));
        }
    }
    out
}

fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut credit, mut pairs) = (0.0, 0.0);
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if li.is_positive() && !lj.is_positive() {
                pairs += 1.0;
                credit += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    credit / pairs
}

fn auc_oracle() -> Check {
    let corpus = auc_corpus();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (scores, labels) in &corpus {
        let got = auc(scores, labels).map_err(|e| e.to_string())?;
        worst = worst.max((got - pairwise_auc(scores, labels)).abs());
    }
    let took = start.elapsed();
    ensure(worst <= AUC_TOLERANCE, || format!("max deviation {worst:e}"))?;
    ensure(took < AUC_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("1000 instances, max |Δ| = {worst:e} ≤ {AUC_TOLERANCE:e}, {took:.0?}"))
}

fn auc_symmetry() -> Check {
    for (k, (scores, labels)) in auc_corpus().iter().enumerate() {
        let flipped: Vec<Label> = labels.iter().map(|l| l.flip()).collect();
        let sum = auc(scores, labels).unwrap() + auc(scores, &flipped).unwrap();
        ensure(sum == 1.0, || format!("instance {k}: sum = {sum:?}"))?;
    }
    Ok("1000 instances, auc(s,y) + auc(s,¬y) == 1.0 exactly".into())
}

// ---------------------------------------------------------------- evaluation

fn confusion_consistency() -> Check {
    let mut rng = SplitMix64::new(0xC0F);
    let mut modes = [0usize; 3];
    let (mut k, mut one_class) = (0, 0);
    while k < 500 {
        let shape = DataShape { samples: 10 + rng.below(60) as usize, ..DataShape::default() };
        let d = random_dataset(&mut rng, shape);
        let test_shape = DataShape { samples: 10 + rng.below(30) as usize, ..shape };
        let test = Arc::new(random_dataset(&mut rng, test_shape));
        let depth = 1 + rng.below(5) as usize;
        let tree = random_tree(&mut rng, &d, "t", &TreeShape { max_depth: depth, refs: vec![], rich: true });
        let which = rng.below(3) as usize;
        let mode = match which {
            0 => EvalMode::TrainingSet,
            1 => EvalMode::TestSet { test_dataset_id: test.id.clone() },
            _ => EvalMode::PercentageSplit { fraction: 0.1 + 0.8 * rng.next_f64(), seed: rng.next_u64() },
        };
        let held = HashMap::from([(test.id.clone(), test.clone())]);
        let r = match evaluate(&tree, &d, &mode, &NoTrees, &held) {
            Ok(r) => r,
            // a held-out side with a single class has no AUC
            Err(e) if e.code() == "OneClassOnly" => {
                one_class += 1;
                continue;
            }
            Err(e) => return Err(format!("pair {k}: {e}")),
        };
        modes[which] += 1;
        k += 1;
        let c = r.confusion;
        let n = c.total();
        let expected_n = match &mode {
            EvalMode::TrainingSet => d.len(),
            EvalMode::TestSet { .. } => test.len(),
            EvalMode::PercentageSplit { fraction, seed } => {
                percentage_split(&d, *fraction, *seed).unwrap().test_indices.len()
            }
        } as u64;
        ensure(n == expected_n, || format!("pair {k}: N = {n}, expected {expected_n}"))?;
        // exact: the reported float is the correctly rounded quotient
        let want = (c.tp + c.tn) as f64 / n as f64;
        ensure(r.accuracy.to_bits() == want.to_bits(), || format!("pair {k}: accuracy {} vs {want}", r.accuracy))?;
    }
    Ok(format!(
        "500 reports (train {}, test {}, split {}); {one_class} one-class held-out sides redrawn",
        modes[0], modes[1], modes[2]
    ))
}

fn split_determinism() -> Check {
    let mut rng = SplitMix64::new(0x5B1);
    for k in 0..200 {
        let shape = DataShape { samples: 3 + rng.below(120) as usize, ..DataShape::default() };
        let d = random_dataset(&mut rng, shape);
        let fraction = 0.01 + 0.98 * rng.next_f64();
        let seed = rng.next_u64();
        let p = percentage_split(&d, fraction, seed).map_err(|e| format!("triple {k}: {e}"))?;

        let train: BTreeSet<usize> = p.train_indices.iter().copied().collect();
        let test: BTreeSet<usize> = p.test_indices.iter().copied().collect();
        ensure(train.len() == p.train_indices.len() && test.len() == p.test_indices.len(), || {
            format!("triple {k}: duplicates")
        })?;
        ensure(train.is_disjoint(&test), || format!("triple {k}: overlap"))?;
        ensure(train.len() + test.len() == d.len(), || format!("triple {k}: not a cover"))?;
        for class in [Label::Positive, Label::Negative] {
            let n = d.samples().iter().filter(|s| s.label == class).count();
            let got = train.iter().filter(|&&i| d.samples()[i].label == class).count();
            let quota = if n >= 2 { ((fraction * n as f64 + 0.5).floor() as usize).clamp(1, n - 1) } else { n };
            ensure(got == quota, || format!("triple {k}: {class} has {got} of {n} on train, quota {quota}"))?;
        }

        let tree = random_tree(&mut rng, &d, "t", &TreeShape { max_depth: 3, refs: vec![], rich: true });
        let mode = EvalMode::PercentageSplit { fraction, seed };
        let run = || evaluate(&tree, &d, &mode, &NoTrees, &NoDatasets).map(|r| r.to_json()).map_err(|e| e.to_string());
        let once = (serde_json::to_string(&p).unwrap(), run());
        let again = (serde_json::to_string(&percentage_split(&d, fraction, seed).unwrap()).unwrap(), run());
        ensure(once == again, || format!("triple {k}: rerun differs"))?;
    }
    Ok("200 triples: disjoint cover, per-class quotas, byte-identical reruns".into())
}

/// Splits until every leaf is pure, alternating features and cutting at
/// the middle distinct value.
fn refine(samples: &[&Sample], features: &[&str], d: &Dataset, depth: usize) -> Node {
    let pos = samples.iter().filter(|s| s.label.is_positive()).count();
    if pos == 0 || pos == samples.len() {
        return Node::leaf(label(pos > 0));
    }
    for offset in 0..features.len() {
        let f = features[(depth + offset) % features.len()];
        let mut xs: Vec<f64> = samples.iter().map(|s| d.schema().number(s, f).unwrap().unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() < 2 {
            continue;
        }
        let mid = xs.len() / 2;
        let t = (xs[mid - 1] + xs[mid]) / 2.0;
        let (l, r): (Vec<&Sample>, Vec<&Sample>) =
            samples.iter().partition(|s| d.schema().number(s, f).unwrap().unwrap() < t);
        return Node::split(
            SplitRule::threshold(f, t),
            refine(&l, features, d, depth + 1),
            refine(&r, features, d, depth + 1),
        );
    }
    unreachable!("conflicting duplicates")
}

fn overfitting() -> Check {
    let mut rng = SplitMix64::new(0x0F17);
    let mut text = String::from("a,b,class\n");
    for i in 0..40 {
        let (a, b) = (rng.below(100_000) as f64 / 1000.0, rng.below(100_000) as f64 / 1000.0);
        let _ = writeln!(text, "{a},{b},{}", if i % 2 == 0 { "yes" } else { "no" });
    }
    let d = parse_csv(&text, "class", "yes").unwrap();
    let distinct: BTreeSet<String> = d.samples().iter().map(|s| format!("{:?}", s.values)).collect();
    ensure(distinct.len() == 40, || "fixture has duplicate rows".into())?;
    let tree = DecisionTree::new("full", "full", d.signature().clone(), refine(&d.all(), &["a", "b"], &d, 0));

    let train = evaluate(&tree, &d, &EvalMode::TrainingSet, &NoTrees, &NoDatasets).unwrap();
    ensure(train.accuracy == 1.0, || format!("training accuracy {}", train.accuracy))?;
    let mut below = 0;
    let mut accs = Vec::new();
    for seed in 0..10 {
        let r =
            evaluate(&tree, &d, &EvalMode::PercentageSplit { fraction: 0.66, seed }, &NoTrees, &NoDatasets).unwrap();
        accs.push(format!("{:.2}", r.accuracy));
        if r.accuracy < 1.0 {
            below += 1;
        }
    }
    ensure(below >= 8, || format!("only {below}/10 seeds below 1.0: {accs:?}"))?;
    Ok(format!(
        "{} leaves; training 1.0, split(0.66) < 1.0 for {below}/10 seeds [{}]",
        tree.root.leaf_count(),
        accs.join(" ")
    ))
}

// ---------------------------------------------------------------- tree references

fn inlining() -> Check {
    let mut rng = SplitMix64::new(0x1F1);
    let mut compared = 0;
    for k in 0..100 {
        let d = random_dataset(&mut rng, DataShape { samples: 50, ..DataShape::default() });
        let sig = d.signature().clone();
        let mut lib: BTreeMap<String, Arc<DecisionTree>> = BTreeMap::new();
        let fit = |t: DecisionTree, lib: &BTreeMap<String, Arc<DecisionTree>>| {
            fit_leaf_stats(&t, &d.all(), d.schema(), lib).unwrap()
        };
        // r0 plain; r1 routes through r0; r2 routes through r1
        let r0 = random_tree(&mut rng, &d, "r0", &TreeShape { max_depth: 3, refs: vec![], rich: true });
        lib.insert("r0".into(), Arc::new(fit(r0, &lib)));
        for (id, inner) in [("r1", "r0"), ("r2", "r1")] {
            let side = TreeShape { max_depth: 2, refs: vec![], rich: true };
            let left = random_tree(&mut rng, &d, "", &side).root;
            let right = random_tree(&mut rng, &d, "", &side).root;
            let root = Node::split(SplitRule::TreeRef(TreeRefRule { tree_id: inner.into() }), left, right);
            lib.insert(id.into(), Arc::new(fit(DecisionTree::new(id, id, sig.clone(), root), &lib)));
        }
        // grafting multiplies sizes, so the children only reach the shorter chains
        let shape = TreeShape { max_depth: 3, refs: vec!["r0".into(), "r1".into()], rich: true };
        let (left, right) = (random_tree(&mut rng, &d, "", &shape).root, random_tree(&mut rng, &d, "", &shape).root);
        let root = Node::Split(Split {
            rule: SplitRule::TreeRef(TreeRefRule { tree_id: "r2".into() }),
            left: Box::new(left),
            right: Box::new(right),
            missing: None,
        });
        let tree = fit(DecisionTree::new("main", "main", sig.clone(), root), &lib);
        let flat = inline_tree_refs(&tree, &lib).map_err(|e| format!("tree {k}: {e}"))?;
        ensure(!flat.root.has_tree_refs(), || format!("tree {k}: references remain"))?;
        for (i, s) in d.samples().iter().enumerate() {
            let a = predict(&tree, s, d.schema(), &lib).unwrap();
            let b = predict(&flat, s, d.schema(), &NoTrees).unwrap();
            ensure((a.label, a.score) == (b.label, b.score), || format!("tree {k}, sample {i}: {a:?} vs {b:?}"))?;
            compared += 1;
        }
    }
    Ok(format!("100 trees with 3-deep reference chains, {compared} (label, score) pairs equal"))
}

// ---------------------------------------------------------------- learners

fn entropy(p: usize, n: usize) -> f64 {
    if p == 0 || p == n {
        return 0.0;
    }
    let q = p as f64 / n as f64;
    -(q * q.log2() + (1.0 - q) * (1.0 - q).log2())
}

/// Every (feature, midpoint) candidate scored from scratch; first best wins.
fn brute_stump(d: &Dataset, features: &[String]) -> Option<(String, f64, f64)> {
    let mut best: Option<(String, f64, f64)> = None;
    for f in features {
        let known: Vec<(f64, bool)> = d
            .samples()
            .iter()
            .filter_map(|s| d.schema().number(s, f).unwrap().map(|x| (x, s.label.is_positive())))
            .collect();
        let mut xs: Vec<f64> = known.iter().map(|k| k.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let n = known.len();
        let p = known.iter().filter(|k| k.1).count();
        for w in xs.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<bool> = known.iter().filter(|k| k.0 < t).map(|k| k.1).collect();
            let (nl, pl) = (left.len(), left.iter().filter(|&&b| b).count());
            let (nr, pr) = (n - nl, p - pl);
            let gain = entropy(p, n) - nl as f64 / n as f64 * entropy(pl, nl) - nr as f64 / n as f64 * entropy(pr, nr);
            if best.as_ref().is_none_or(|b| gain > b.2 + 1e-12) {
                best = Some((f.clone(), t, gain));
            }
        }
    }
    best
}

fn stump_optimality() -> Check {
    let mut rng = SplitMix64::new(0x57);
    let mut checked = 0;
    while checked < 200 {
        let k = 1 + rng.below(3) as usize;
        let n = 4 + rng.below(12) as usize;
        let mut text = (0..k).map(|i| format!("f{i},")).collect::<String>() + "class\n";
        for _ in 0..n {
            for _ in 0..k {
                if rng.below(10) == 0 {
                    text.push_str("NA,");
                } else {
                    let _ = write!(text, "{},", rng.below(6));
                }
            }
            text.push_str(if rng.below(2) == 0 { "yes\n" } else { "no\n" });
        }
        let Ok(d) = parse_csv(&text, "class", "yes") else { continue };
        let features: Vec<String> = (0..k).map(|i| format!("f{i}")).collect();
        let (p, _) = d.class_counts();
        let Some(want) = brute_stump(&d, &features) else { continue };
        if p == 0 || p == d.len() {
            continue;
        }
        let got = match train_stump(&d.all(), d.schema(), &features).map_err(|e| format!("{e}\n{text}"))? {
            TrainedModel::Stump(s) => (s.feature, s.threshold, s.gain),
            _ => unreachable!(),
        };
        ensure(got.0 == want.0 && got.1 == want.1 && (got.2 - want.2).abs() <= STUMP_GAIN_TOLERANCE, || {
            format!("instance {checked}: got {got:?}, brute force {want:?}\n{text}")
        })?;
        checked += 1;
    }
    let d = parse_csv("x,c\n1,N\n2,N\n8,P\n9,P\n", "c", "P").unwrap();
    let TrainedModel::Stump(s) = train(&d.all(), d.schema(), &LearnerSpec::stump(&["x"])).unwrap() else {
        unreachable!()
    };
    ensure(s.threshold == 5.0 && s.gain == 1.0, || format!("fixture: threshold {}, gain {}", s.threshold, s.gain))?;
    Ok("200 instances match brute force; fixture threshold 5.0, gain 1.0 bit".into())
}

fn gradient_check() -> Check {
    let mut rng = SplitMix64::new(0x6C);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 3 + rng.below(20) as usize;
        let k = 1 + rng.below(4) as usize;
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.next_f64() * 4.0 - 2.0).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.below(2) as f64).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let b = rng.next_f64() - 0.5;
        let l2 = if rng.below(2) == 0 { 0.0 } else { rng.next_f64() };
        let (_, gw, gb) = objective(&x, &y, &w, b, l2);
        let rel = |num: f64, ana: f64| (num - ana).abs() / (num.abs() + ana.abs()).max(1e-8);
        for i in 0..=k {
            let at = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if i < k {
                    w2[i] += delta;
                } else {
                    b2 += delta;
                }
                objective(&x, &y, &w2, b2, l2).0
            };
            let numeric = (at(GRADIENT_STEP) - at(-GRADIENT_STEP)) / (2.0 * GRADIENT_STEP);
            let analytic = if i < k { gw[i] } else { gb };
            worst = worst.max(rel(numeric, analytic));
        }
    }
    ensure(worst <= GRADIENT_TOLERANCE, || format!("max relative error {worst:e}"))?;

    let mut text = String::from("x,y,c\n");
    for i in 0..20 {
        let _ = writeln!(text, "{},{},{}", i, (i * 7) % 5, if i >= 10 { "P" } else { "N" });
    }
    let d = parse_csv(&text, "c", "P").unwrap();
    let model = train(&d.all(), d.schema(), &LearnerSpec::logreg(&["x", "y"], 0.1, 500, 0.0)).unwrap();
    let correct = d
        .samples()
        .iter()
        .filter(|s| (model.score(s, d.schema()).unwrap().unwrap() >= 0.5) == s.label.is_positive())
        .count();
    ensure(correct == d.len(), || format!("separable fixture: {correct}/{} correct", d.len()))?;
    Ok(format!("50 instances, max relative error {worst:.1e} ≤ {GRADIENT_TOLERANCE:e}; separable fixture 20/20 after 500 epochs"))
}

// ---------------------------------------------------------------- visual rules

/// Upward ray with orientation tests. `None` inside the boundary band.
fn ray_cast(poly: &Polygon, p: Point) -> Option<bool> {
    let v = &poly.vertices;
    let mut inside = false;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let cross = dx * (p.y - a.y) - dy * (p.x - a.x);
        let in_box = p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y);
        if in_box && cross == 0.0 {
            return Some(true);
        }
        if in_box && (cross / dx.hypot(dy)).abs() < BOUNDARY_BAND {
            return None;
        }
        if (a.x > p.x) != (b.x > p.x) && (if b.x > a.x { cross < 0.0 } else { cross > 0.0 }) {
            inside = !inside;
        }
    }
    Some(inside)
}

fn visual_oracle() -> Check {
    let mut rng = SplitMix64::new(0x715);
    let (mut checked, mut skipped, mut inside) = (0, 0, 0);
    for set in 0..20 {
        let polygons: Vec<Polygon> = (0..1 + rng.below(3)).map(|_| random_polygon(&mut rng, 0.0, 10.0)).collect();
        let mut text = String::from("px,py,class\n");
        let mut points = Vec::new();
        for i in 0..500 {
            let p = if i % 2 == 0 {
                Point::new(rng.below(25) as f64 / 2.0 - 1.0, rng.below(25) as f64 / 2.0 - 1.0)
            } else {
                Point::new(rng.next_f64() * 12.0 - 1.0, rng.next_f64() * 12.0 - 1.0)
            };
            let _ = writeln!(text, "{},{},{}", p.x, p.y, if i % 2 == 0 { "yes" } else { "no" });
            points.push(p);
        }
        let d = parse_csv(&text, "class", "yes").unwrap();
        let rule = SplitRule::Visual(VisualRule {
            feature_x: "px".into(),
            feature_y: "py".into(),
            polygons: polygons.clone(),
        });
        for (i, (s, p)) in d.samples().iter().zip(&points).enumerate() {
            let verdicts: Option<Vec<bool>> = polygons.iter().map(|poly| ray_cast(poly, *p)).collect();
            let Some(verdicts) = verdicts else {
                skipped += 1;
                continue;
            };
            let want = verdicts.into_iter().any(|v| v);
            let got = route(&rule, s, d.schema(), &NoTrees).unwrap() == Route::Left;
            ensure(got == want, || format!("set {set}, point {i} {p:?}: rule says {got}, ray casting {want}"))?;
            checked += 1;
            inside += usize::from(want);
        }
    }
    ensure(skipped < 100, || format!("{skipped} probes in the boundary band"))?;
    Ok(format!("20 polygon sets, {checked} points agree ({inside} inside), {skipped} skipped within {BOUNDARY_BAND:e} of an edge"))
}

// ---------------------------------------------------------------- store and service

fn dir_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

async fn persistence(rt_seed: u64) -> Check {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open_dir(dir.path()).unwrap());
    let csv = synth::random_csv(&mut SplitMix64::new(rt_seed), DataShape::default());
    let req = DatasetImport {
        name: "acceptance".into(),
        csv,
        class_column: synth::CLASS_COLUMN.into(),
        positive_name: synth::POSITIVE.into(),
        ..DatasetImport::default()
    };
    let data = store.import_dataset(req).unwrap().dataset;
    let base = common::start(store.clone()).await;

    let mut rng = SplitMix64::new(rt_seed ^ 0xFF);
    let mut model: BTreeMap<String, (&str, &str)> = BTreeMap::new();
    let tokens = [ALICE, BOB];
    let mut tally = BTreeMap::<&str, usize>::new();
    for step in 0..200 {
        let token = tokens[rng.below(2) as usize];
        let vis = if rng.below(2) == 0 { "public" } else { "private" };
        let ids: Vec<String> = model.keys().cloned().collect();
        let target = (!ids.is_empty()).then(|| ids[rng.below(ids.len() as u64) as usize].clone());
        let tree =
            tree_to_value(&random_tree(&mut rng, &data, "", &TreeShape { max_depth: 2, refs: vec![], rich: true }));
        let op = if target.is_none() { 0 } else { rng.below(6) };
        let err = |r: &common::Reply| r.json()["code"].as_str().unwrap_or_default().to_owned();
        match (op, target) {
            (0, _) | (_, None) => {
                *tally.entry("create").or_default() += 1;
                let r = common::post(&base, "/api/trees", Some(token), &json!({"tree": tree, "visibility": vis})).await;
                ensure(r.status == 201, || format!("step {step}: create {} {}", r.status, r.body))?;
                model.insert(r.json()["id"].as_str().unwrap().to_owned(), (token, vis));
            }
            (1, Some(id)) => {
                *tally.entry("update").or_default() += 1;
                let (owner, old) = model[&id];
                let r = common::put(
                    &base,
                    &format!("/api/trees/{id}"),
                    Some(token),
                    &json!({"tree": tree, "visibility": vis}),
                )
                .await;
                let want = if owner == token {
                    200
                } else if old == "public" {
                    403
                } else {
                    404
                };
                ensure(r.status == want, || format!("step {step}: update {} (want {want}) {}", r.status, r.body))?;
                if r.status == 200 {
                    model.insert(id, (owner, vis));
                }
            }
            (2, Some(id)) => {
                *tally.entry("delete").or_default() += 1;
                let (owner, v) = model[&id];
                let r = common::delete(&base, &format!("/api/trees/{id}"), Some(token)).await;
                let want = if owner == token {
                    200
                } else if v == "public" {
                    403
                } else {
                    404
                };
                ensure(r.status == want, || format!("step {step}: delete {} (want {want}) {}", r.status, err(&r)))?;
                if r.status == 200 {
                    model.remove(&id);
                }
            }
            (3, Some(id)) => {
                *tally.entry("get").or_default() += 1;
                let (owner, v) = model[&id];
                for (who, tok) in [("owner-side", Some(token)), ("anonymous", None)] {
                    let r = common::get(&base, &format!("/api/trees/{id}"), tok).await;
                    let visible = v == "public" || tok == Some(owner);
                    ensure((r.status == 200) == visible, || format!("step {step}: {who} get {}", r.status))?;
                    if visible {
                        let doc = r.json();
                        ensure(doc["owned"] == json!(tok == Some(owner)), || format!("step {step}: owned flag"))?;
                        ensure(doc["visibility"] == v, || format!("step {step}: visibility {}", doc["visibility"]))?;
                    }
                }
            }
            (4, Some(id)) => {
                *tally.entry("evaluate").or_default() += 1;
                let (owner, v) = model[&id];
                let r =
                    common::post(&base, &format!("/api/trees/{id}/evaluate"), Some(token), &json!("trainingSet")).await;
                let visible = v == "public" || token == owner;
                ensure((r.status == 200) == visible, || format!("step {step}: evaluate {} {}", r.status, r.body))?;
            }
            _ => {}
        }
        for tok in [Some(ALICE), Some(BOB), None] {
            let listed: BTreeSet<String> = common::get(&base, "/api/trees", tok)
                .await
                .json()
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t["id"].as_str().unwrap().to_owned())
                .collect();
            let want: BTreeSet<String> =
                model.iter().filter(|(_, (o, v))| *v == "public" || tok == Some(*o)).map(|(k, _)| k.clone()).collect();
            ensure(listed == want, || format!("step {step}: listing for {tok:?} differs"))?;
        }
    }

    let before = dir_bytes(dir.path());
    let exported = store.export().unwrap();
    let reopened = Store::open_dir(dir.path()).map_err(|e| e.to_string())?;
    ensure(reopened.export().unwrap() == exported, || "reopened store exports different bytes".into())?;
    ensure(dir_bytes(dir.path()) == before, || "reopening rewrote files".into())?;
    let on_disk: BTreeMap<String, Vec<u8>> = before.into_iter().map(|(k, v)| (k.replace('\\', "/"), v)).collect();
    ensure(on_disk == exported, || "files on disk are not the canonical serialization".into())?;
    let ops: Vec<String> = tally.iter().map(|(k, v)| format!("{k} {v}")).collect();
    Ok(format!(
        "200 ops ({}), {} trees; reopen byte-identical over {} files",
        ops.join(", "),
        model.len(),
        on_disk.len()
    ))
}

fn cli_evaluate(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_branch"))
        .arg("evaluate")
        .args(args)
        .env_remove("BRANCH_STORE")
        .output()
        .unwrap();
    if out.status.success() {
        Ok(String::from_utf8(out.stdout).unwrap())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

async fn cli_api_agreement() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let files = tempfile::tempdir().unwrap();
    let store_dir = dir.path().to_str().unwrap().to_owned();
    let store = Arc::new(Store::open_dir(dir.path()).unwrap());

    let cohort_csv = demo::walkthrough_csv(120, 2013);
    let import = |name: &str, csv: String, class: &str, positive: &str, test: Option<String>| {
        let req = DatasetImport {
            name: name.into(),
            csv,
            class_column: class.into(),
            positive_name: positive.into(),
            companion_test_csv: test,
            ..DatasetImport::default()
        };
        store.import_dataset(req).unwrap()
    };
    let majority = import("majority", demo::majority_csv(), demo::CLASS_COLUMN, demo::POSITIVE, None);
    let cohort =
        import("cohort", cohort_csv.clone(), demo::CLASS_COLUMN, demo::POSITIVE, Some(demo::walkthrough_csv(60, 7)));
    let mut rng = SplitMix64::new(0xA91);
    let synth_csv = synth::random_csv(&mut rng, DataShape { samples: 80, ..DataShape::default() });
    let synth_test = synth::random_csv(&mut rng, DataShape { samples: 40, ..DataShape::default() });
    let synthetic = import("synthetic", synth_csv.clone(), synth::CLASS_COLUMN, synth::POSITIVE, Some(synth_test));

    let cohort_tree = demo::walkthrough_tree(cohort.dataset.signature());
    let lib_tree = store.create_tree(cohort_tree.clone(), ALICE, branch_core::store::Visibility::Public).unwrap();
    let via_ref = DecisionTree::new(
        "",
        "via reference",
        cohort.dataset.signature().clone(),
        Node::split(
            SplitRule::TreeRef(TreeRefRule { tree_id: lib_tree.id().to_owned() }),
            Node::split(SplitRule::threshold("ESR1", 6.0), Node::leaf(Label::Positive), Node::leaf(Label::Negative)),
            Node::split(
                SplitRule::Feature(FeatureRule {
                    feature: "grade".into(),
                    test: FeatureTest::Categories(vec!["G3".into()]),
                }),
                Node::leaf(Label::Positive),
                Node::leaf(Label::Negative),
            ),
        ),
    );
    let synth_trees: Vec<DecisionTree> = (0..3)
        .map(|i| {
            random_tree(
                &mut rng,
                &synthetic.dataset,
                &format!("s{i}"),
                &TreeShape { max_depth: 4, refs: vec![], rich: true },
            )
        })
        .collect();
    let base = common::start(store.clone()).await;

    let write = |name: &str, body: &str| {
        let p = files.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_owned()
    };
    let cohort_path = write("cohort.csv", &cohort_csv);
    let synth_path = write("synth.csv", &synth_csv);
    let majority_path = write("majority.csv", &demo::majority_csv());

    let cohort_test = cohort.companion_test_dataset_id.clone().unwrap();
    let synth_test = synthetic.companion_test_dataset_id.clone().unwrap();
    // (dataset record, csv path, class, positive, tree, stored id, mode)
    let mut combos: Vec<(&branch_core::store::DatasetRecord, &str, &str, &str, DecisionTree, Option<String>, String)> =
        Vec::new();
    let majority_tree = demo::majority_tree(majority.dataset.signature());
    for mode in ["train", "split:0.5:1", "split:0.7:3"] {
        combos.push((
            &majority,
            &majority_path,
            demo::CLASS_COLUMN,
            demo::POSITIVE,
            majority_tree.clone(),
            None,
            mode.into(),
        ));
    }
    for mode in ["train".to_owned(), "split:0.66:7".into(), "split:0.66:8".into(), format!("test:{cohort_test}")] {
        combos.push((&cohort, &cohort_path, demo::CLASS_COLUMN, demo::POSITIVE, cohort_tree.clone(), None, mode));
    }
    for mode in ["train".to_owned(), "split:0.5:99".into(), format!("test:{cohort_test}")] {
        combos.push((&cohort, &cohort_path, demo::CLASS_COLUMN, demo::POSITIVE, via_ref.clone(), None, mode.clone()));
    }
    combos.push((
        &cohort,
        &cohort_path,
        demo::CLASS_COLUMN,
        demo::POSITIVE,
        cohort_tree.clone(),
        Some(lib_tree.id().to_owned()),
        "train".into(),
    ));
    combos.push((
        &cohort,
        &cohort_path,
        demo::CLASS_COLUMN,
        demo::POSITIVE,
        cohort_tree.clone(),
        Some(lib_tree.id().to_owned()),
        "split:0.8:5".into(),
    ));
    for (i, t) in synth_trees.iter().enumerate() {
        for mode in ["train".to_owned(), format!("split:0.6:{i}"), format!("test:{synth_test}")] {
            combos.push((&synthetic, &synth_path, synth::CLASS_COLUMN, synth::POSITIVE, t.clone(), None, mode));
        }
    }
    combos.truncate(20);
    ensure(combos.len() == 20, || format!("{} combinations", combos.len()))?;

    for (k, (rec, path, class, positive, tree, stored, mode)) in combos.iter().enumerate() {
        let tree_path = write(&format!("tree{k}.json"), &tree_to_json(tree));
        // test mode needs the store for the held-out id; others read the CSV file
        let by_file = !mode.starts_with("test:") && k % 2 == 0;
        let cli = if by_file {
            cli_evaluate(&[
                "--dataset",
                path,
                "--class",
                class,
                "--positive",
                positive,
                "--tree",
                &tree_path,
                "--mode",
                mode,
                "--store",
                &store_dir,
            ])
        } else {
            cli_evaluate(&["--dataset", rec.id(), "--tree", &tree_path, "--mode", mode, "--store", &store_dir])
        }
        .map_err(|e| format!("combination {k} ({mode}): cli failed: {e}"))?;

        let parsed_mode = branch::cli::parse_mode(mode, |t| Ok(t.to_owned())).unwrap();
        let mode_json = serde_json::to_value(&parsed_mode).unwrap();
        let reply = match stored {
            Some(id) => {
                common::post(&base, &format!("/api/trees/{id}/evaluate?dataset={}", rec.id()), None, &mode_json).await
            }
            None => {
                let body = json!({"tree": tree_to_value(tree), "dataset_id": rec.id(), "mode": mode_json});
                common::post(&base, "/api/evaluate", None, &body).await
            }
        };
        ensure(reply.status == 200, || format!("combination {k}: api {} {}", reply.status, reply.body))?;
        ensure(cli == format!("{}\n", reply.body), || {
            format!("combination {k} ({mode}):\ncli {cli}api {}", reply.body)
        })?;
    }
    Ok("20 combinations over 3 datasets, 6 trees and all three modes: stdout == response body".into())
}

fn main() {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    let checks: Vec<(&str, Box<dyn FnOnce() -> Check>)> = vec![
        ("auc-oracle", Box::new(auc_oracle)),
        ("auc-symmetry", Box::new(auc_symmetry)),
        ("confusion-consistency", Box::new(confusion_consistency)),
        ("split-determinism", Box::new(split_determinism)),
        ("overfitting-demo", Box::new(overfitting)),
        ("treeref-inlining", Box::new(inlining)),
        ("stump-optimality", Box::new(stump_optimality)),
        ("logreg-gradient", Box::new(gradient_check)),
        ("visual-oracle", Box::new(visual_oracle)),
        ("persistence-visibility", Box::new(|| rt.block_on(persistence(0x9E)))),
        ("cli-api-agreement", Box::new(|| rt.block_on(cli_api_agreement()))),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {}",
                p.downcast_ref::<String>().cloned().unwrap_or_else(|| format!("{:?}", p.downcast_ref::<&str>()))
            ))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name:<24} {detail} ({took:.1?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name:<24} {why} ({took:.1?})");
            }
        }
    }
    println!("{} criteria, {failed} failed, {:.1?}", 11, suite.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
