use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use branch::demo;

fn branch(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_branch"));
    cmd.args(args).env_remove("BRANCH_STORE");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn branch")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn demo_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = branch(&["demo", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    dir
}

#[test]
fn majority_leaf_scores_point_seven() {
    let dir = demo_dir();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let o = branch(
        &[
            "evaluate",
            "--dataset",
            &p("majority.csv"),
            "--class",
            demo::CLASS_COLUMN,
            "--positive",
            demo::POSITIVE,
            "--tree",
            &p("majority-tree.json"),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["accuracy"], 0.7);
    assert_eq!(v["confusion"]["tp"], 7);
    assert_eq!(v["confusion"]["fp"], 3);
}

#[test]
fn split_runs_are_byte_identical() {
    let dir = demo_dir();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let args = |mode: &'static str| {
        vec![
            "evaluate".to_owned(),
            "--dataset".into(),
            p("cohort.csv"),
            "--class".into(),
            demo::CLASS_COLUMN.into(),
            "--positive".into(),
            demo::POSITIVE.into(),
            "--tree".into(),
            p("cohort-tree.json"),
            "--mode".into(),
            mode.into(),
        ]
    };
    let run = |mode| {
        let a = args(mode);
        branch(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[])
    };
    let first = run("split:0.66:7");
    let second = run("split:0.66:7");
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).ends_with("}\n"));

    let bad = run("split:1.5:7");
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("BadFraction"), "{}", stderr(&bad));
    assert!(bad.stdout.is_empty());

    let bad = run("sideways");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn data_errors_exit_one() {
    let dir = demo_dir();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    // cohort tree on the majority data: signature mismatch
    let o = branch(
        &[
            "evaluate",
            "--dataset",
            &p("majority.csv"),
            "--class",
            demo::CLASS_COLUMN,
            "--positive",
            demo::POSITIVE,
            "--tree",
            &p("cohort-tree.json"),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));

    let o = branch(
        &[
            "evaluate",
            "--dataset",
            &p("majority.csv"),
            "--class",
            "nope",
            "--positive",
            demo::POSITIVE,
            "--tree",
            &p("majority-tree.json"),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadClassColumn"), "{}", stderr(&o));

    let o = branch(&["evaluate", "--dataset", &p("majority.csv"), "--tree", &p("majority-tree.json")], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(branch(&["frobnicate"], &[]).status.code(), Some(2));
}

#[test]
fn import_then_evaluate_by_id() {
    let dir = demo_dir();
    let store = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let env = [("BRANCH_STORE", store.path())];
    let o = branch(
        &[
            "import",
            "--csv",
            &p("cohort.csv"),
            "--class",
            demo::CLASS_COLUMN,
            "--positive",
            demo::POSITIVE,
            "--name",
            "cohort",
            "--test",
            &p("cohort.csv"),
        ],
        &env,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let desc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let id = desc["id"].as_str().unwrap();
    let test_id = desc["companion_test_dataset_id"].as_str().unwrap();
    assert_eq!(desc["sample_count"], 120);

    let by_id = branch(
        &["evaluate", "--dataset", id, "--tree", &p("cohort-tree.json"), "--mode", &format!("test:{test_id}")],
        &env,
    );
    assert_eq!(by_id.status.code(), Some(0), "{}", stderr(&by_id));
    let by_path = branch(
        &[
            "evaluate",
            "--dataset",
            &p("cohort.csv"),
            "--class",
            demo::CLASS_COLUMN,
            "--positive",
            demo::POSITIVE,
            "--tree",
            &p("cohort-tree.json"),
        ],
        &[],
    );
    // the companion holds the same rows, so test-set metrics equal training-set metrics
    let a: Value = serde_json::from_str(&stdout(&by_id)).unwrap();
    let b: Value = serde_json::from_str(&stdout(&by_path)).unwrap();
    assert_eq!(a["confusion"], b["confusion"]);
    assert_eq!(a["auc"], b["auc"]);

    let table = branch(&["evaluate", "--dataset", id, "--tree", &p("cohort-tree.json"), "--format", "table"], &env);
    let text = stdout(&table);
    assert!(text.contains("accuracy"), "{text}");
    assert!(text.contains(demo::POSITIVE));
}

#[test]
fn train_model_prints_a_model_document() {
    let dir = demo_dir();
    let p = dir.path().join("majority.csv");
    let o = branch(
        &[
            "train-model",
            "--dataset",
            p.to_str().unwrap(),
            "--class",
            demo::CLASS_COLUMN,
            "--positive",
            demo::POSITIVE,
            "--kind",
            "stump",
            "--features",
            "score",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["type"], "stump");
    assert_eq!(v["threshold"], 6.5);
    assert_eq!(v["gain"].as_f64().unwrap(), branch_core::learners::entropy_bits(7, 10));
}

#[test]
fn in_process_runner_matches_binary() {
    let dir = demo_dir();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let args = [
        "branch",
        "evaluate",
        "--dataset",
        &p("cohort.csv"),
        "--class",
        demo::CLASS_COLUMN,
        "--positive",
        demo::POSITIVE,
        "--tree",
        &p("cohort-tree.json"),
        "--mode",
        "split:0.5:3",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(branch::cli::run_with(args, &mut out, &mut err), 0);
    let bin = branch(&args[1..], &[]);
    assert_eq!(out, bin.stdout);
}
