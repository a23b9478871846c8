//! Command-line driver: `import`, `evaluate`, `train-model`, `serve`, `demo`.
//!
//! Exit codes: 0 success, 1 data or validation error (the machine code is
//! printed to stderr as `error[Code]: message`), 2 usage error.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use branch_core::dataset::{parse_csv, Dataset, DatasetResolver, NoDatasets};
use branch_core::eval::{evaluate, EvalMode, EvaluationReport};
use branch_core::learners::{LearnerKind, LearnerSpec};
use branch_core::store::{DatasetImport, Snapshot, Store};
use branch_core::tree::{tree_from_json, tree_to_json, NoTrees, TreeResolver};
use branch_core::Error;

use crate::{demo, ops, service};

#[derive(Debug, Parser)]
#[command(name = "branch", version, about = "Build, evaluate and share decision trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a CSV and add it to the store.
    Import {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long = "class")]
        class_column: String,
        #[arg(long)]
        positive: String,
        #[arg(long, default_value = "")]
        name: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Held-out companion CSV with the same header.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, env = "BRANCH_STORE", default_value = "branch-store")]
        store: PathBuf,
    },
    /// Evaluate a tree file on a dataset.
    Evaluate {
        /// CSV path, or the id of a stored dataset.
        #[arg(long)]
        dataset: String,
        #[arg(long = "class")]
        class_column: Option<String>,
        #[arg(long)]
        positive: Option<String>,
        #[arg(long)]
        tree: PathBuf,
        /// `train` | `test:<dataset-id-or-path>` | `split:<fraction>:<seed>`
        #[arg(long, default_value = "train")]
        mode: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Store used for stored datasets, `test:<id>` and tree references.
        #[arg(long, env = "BRANCH_STORE")]
        store: Option<PathBuf>,
    },
    /// Train a stump or logistic-regression model for a model node.
    TrainModel {
        #[arg(long)]
        dataset: String,
        #[arg(long = "class")]
        class_column: Option<String>,
        #[arg(long)]
        positive: Option<String>,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Comma-separated numeric features.
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0.0)]
        l2: f64,
        #[arg(long, env = "BRANCH_STORE")]
        store: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "BRANCH_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "BRANCH_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "BRANCH_STORE", default_value = "branch-store")]
        store: PathBuf,
        #[arg(long, env = "BRANCH_ASSETS")]
        assets: Option<PathBuf>,
        /// Per-request time limit in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Write the demo datasets and example trees to a directory.
    Demo {
        #[arg(long, default_value = "branch-demo")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Stump,
    Logreg,
}

/// Failure of one invocation.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) => 1,
        }
    }
}

/// Parses an evaluation mode. Grammar and fraction errors are usage errors.
pub fn parse_mode(
    spec: &str,
    resolve_test: impl FnOnce(&str) -> Result<String, CliError>,
) -> Result<EvalMode, CliError> {
    let usage = || {
        CliError::Usage(format!(
            "bad --mode `{spec}`: expected train | test:<dataset-id-or-path> | split:<fraction>:<seed>"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["train"] => Ok(EvalMode::TrainingSet),
        ["test", rest @ ..] if !rest.is_empty() && !rest.join(":").is_empty() => {
            Ok(EvalMode::TestSet { test_dataset_id: resolve_test(&rest.join(":"))? })
        }
        ["split", f, seed] => {
            let fraction: f64 = f.parse().map_err(|_| usage())?;
            let seed: u64 = seed.parse().map_err(|_| usage())?;
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(CliError::Usage(format!("BadFraction: {}", Error::BadFraction(fraction))));
            }
            Ok(EvalMode::PercentageSplit { fraction, seed })
        }
        _ => Err(usage()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Core(Error::NotFound(format!("{} ({e})", path.display()))))
}

fn open_store(path: &Path) -> Result<Snapshot, CliError> {
    Ok((*Store::open_dir(path)?.snapshot()).clone())
}

/// Loads `--dataset`: a CSV file when the path exists, otherwise a stored id.
fn load_dataset(
    arg: &str,
    class_column: Option<&str>,
    positive: Option<&str>,
    snap: Option<&Snapshot>,
) -> Result<Arc<Dataset>, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let (Some(c), Some(p)) = (class_column, positive) else {
            return Err(CliError::Usage("a CSV dataset needs --class and --positive".into()));
        };
        let text = read(path)?;
        return Ok(Arc::new(parse_csv(&text, c, p)?));
    }
    match snap {
        Some(s) => Ok(s.resolve_dataset(arg).ok_or_else(|| Error::NotFound(format!("dataset `{arg}`")))?),
        None => Err(CliError::Core(Error::NotFound(format!("dataset file `{arg}` (no store configured for ids)")))),
    }
}

/// Held-out datasets given on the command line plus the store, if any.
struct Datasets<'a> {
    extra: HashMap<String, Arc<Dataset>>,
    store: Option<&'a Snapshot>,
}

impl DatasetResolver for Datasets<'_> {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.extra.get(id).cloned().or_else(|| self.store.and_then(|s| s.resolve_dataset(id)))
    }
}

pub fn evaluate_command(
    dataset: &str,
    class_column: Option<&str>,
    positive: Option<&str>,
    tree: &Path,
    mode: &str,
    store: Option<&Path>,
) -> Result<(EvaluationReport, Arc<Dataset>), CliError> {
    let snap = store.map(open_store).transpose()?;
    let data = load_dataset(dataset, class_column, positive, snap.as_ref())?;
    let mut extra = HashMap::new();
    let mode = parse_mode(mode, |target| {
        let path = Path::new(target);
        if path.is_file() {
            let text = read(path)?;
            let labeling = data.labeling();
            let class = class_column.ok_or_else(|| CliError::Usage("a CSV test set needs --class".into()))?;
            let test = parse_csv(&text, class, &labeling.positive)?;
            let id = test.id.clone();
            extra.insert(id.clone(), Arc::new(test));
            Ok(id)
        } else {
            Ok(target.to_owned())
        }
    })?;
    let tree = tree_from_json(&read(tree)?)?;
    let datasets = Datasets { extra, store: snap.as_ref() };
    let lib: &dyn TreeResolver = match &snap {
        Some(s) => s,
        None => &NoTrees,
    };
    let report = evaluate(&tree, &data, &mode, lib, &datasets)?;
    Ok((report, data))
}

/// Text rendering of a report in the layout of the builder's sidebar.
pub fn render_table(report: &EvaluationReport, data: &Dataset) -> String {
    let labels = data.labeling();
    let mode = match &report.mode {
        EvalMode::TrainingSet => "training set".to_owned(),
        EvalMode::TestSet { test_dataset_id } => format!("test set {test_dataset_id}"),
        EvalMode::PercentageSplit { fraction, seed } => format!("percentage split {fraction} (seed {seed})"),
    };
    let c = &report.confusion;
    let w = labels.positive.len().max(labels.negative.len()).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "mode      {mode}");
    let _ = writeln!(out, "accuracy  {:.3}", report.accuracy);
    let _ = writeln!(out, "AUC       {:.3}", report.auc);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:w$}  {:>w$}  {:>w$}   (rows: actual, columns: predicted)",
        "", labels.positive, labels.negative
    );
    let _ = writeln!(out, "{:w$}  {:>w$}  {:>w$}", labels.positive, c.tp, c.fn_);
    let _ = writeln!(out, "{:w$}  {:>w$}  {:>w$}", labels.negative, c.fp, c.tn);
    if !report.leaves.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "leaf      class       samples  accuracy");
        for l in &report.leaves {
            let acc = l.accuracy.map_or("-".to_owned(), |a| format!("{:.1}%", a * 100.0));
            let path = if l.path.is_empty() { "(root)" } else { l.path.as_str() };
            let _ = writeln!(out, "{path:<9} {:<11} {:>6.1}%  {acc}", labels.name_of(l.label), l.fraction * 100.0);
        }
    }
    for warning in &report.warnings {
        let _ = writeln!(out, "\nwarning: {warning}");
    }
    out
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Core(Error::Io(e));
    match cli.command {
        Command::Import { csv, class_column, positive, name, description, test, store } => {
            let req = DatasetImport {
                name: if name.is_empty() {
                    csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
                } else {
                    name
                },
                description,
                csv: read(&csv)?,
                class_column,
                positive_name: positive,
                companion_test_csv: test.as_deref().map(read).transpose()?,
            };
            let rec = Store::open_dir(&store)?.import_dataset(req)?;
            writeln!(stdout, "{}", branch_core::json::to_canonical_string(&rec.descriptor())).map_err(io)?;
        }
        Command::Evaluate { dataset, class_column, positive, tree, mode, format, store } => {
            let (report, data) = evaluate_command(
                &dataset,
                class_column.as_deref(),
                positive.as_deref(),
                &tree,
                &mode,
                store.as_deref(),
            )?;
            match format {
                Format::Json => writeln!(stdout, "{}", report.to_json()).map_err(io)?,
                Format::Table => write!(stdout, "{}", render_table(&report, &data)).map_err(io)?,
            }
        }
        Command::TrainModel { dataset, class_column, positive, kind, features, learning_rate, epochs, l2, store } => {
            let snap = store.as_deref().map(open_store).transpose()?;
            let data = load_dataset(&dataset, class_column.as_deref(), positive.as_deref(), snap.as_ref())?;
            let spec = LearnerSpec {
                kind: match kind {
                    KindArg::Stump => LearnerKind::Stump,
                    KindArg::Logreg => LearnerKind::LogReg,
                },
                features,
                learning_rate,
                epochs,
                l2,
                seed: 0,
            };
            let model = ops::train_on(&data, &spec)?;
            writeln!(stdout, "{}", branch_core::json::to_canonical_string(&model.to_json())).map_err(io)?;
        }
        Command::Serve { port, host, store, assets, timeout } => {
            let config = service::ServeConfig { host, port, store, assets, timeout: Duration::from_secs(timeout) };
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(service::serve(config)).map_err(io)?;
        }
        Command::Demo { out } => {
            std::fs::create_dir_all(&out).map_err(io)?;
            let majority = demo::majority_dataset();
            let cohort = demo::walkthrough_dataset();
            let files = [
                ("majority.csv", demo::majority_csv()),
                ("majority-tree.json", tree_to_json(&demo::majority_tree(majority.signature())) + "\n"),
                ("cohort.csv", demo::walkthrough_csv(120, 2013)),
                ("cohort-tree.json", tree_to_json(&demo::walkthrough_tree(cohort.signature())) + "\n"),
            ];
            for (name, body) in &files {
                std::fs::write(out.join(name), body).map_err(io)?;
            }
            let report = evaluate(
                &demo::majority_tree(majority.signature()),
                &majority,
                &EvalMode::TrainingSet,
                &NoTrees,
                &NoDatasets,
            )?;
            let summary = serde_json::json!({
                "directory": out.display().to_string(),
                "files": files.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
                "class_column": demo::CLASS_COLUMN,
                "positive": demo::POSITIVE,
                "majority_report": serde_json::to_value(&report).expect("report serializes"),
            });
            writeln!(stdout, "{}", branch_core::json::to_canonical_string(&summary)).map_err(io)?;
        }
    }
    Ok(())
}

/// Runs one invocation, writing results to `stdout` and diagnostics to
/// `stderr`; returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = match &err {
                CliError::Usage(msg) => writeln!(stderr, "usage error: {msg}"),
                CliError::Core(e) => writeln!(stderr, "error[{}]: {e}", e.code()),
            };
            err.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
