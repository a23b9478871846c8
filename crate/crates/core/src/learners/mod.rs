//! Built-in learners whose trained models can act as split rules: an
//! entropy-driven decision stump and L2-regularised logistic regression.

mod logreg;
mod stump;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::dataset::{FeatureKind, Label, Sample, Schema};
use crate::error::{Error, Result};
use crate::json::{as_array, as_f64, as_str, index, ObjReader};

pub use self::logreg::{objective, sigmoid, train_logreg, train_logreg_traced, LogRegFit};
pub use self::stump::{entropy_bits, train_stump};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Stump,
    LogReg,
}

fn default_learning_rate() -> f64 {
    0.1
}

fn default_epochs() -> usize {
    500
}

/// What to train and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub features: Vec<String>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub l2: f64,
    /// Recorded for provenance; both learners are deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn stump(features: &[&str]) -> Self {
        LearnerSpec {
            kind: LearnerKind::Stump,
            features: features.iter().map(|s| s.to_string()).collect(),
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            l2: 0.0,
            seed: 0,
        }
    }

    pub fn logreg(features: &[&str], learning_rate: f64, epochs: usize, l2: f64) -> Self {
        LearnerSpec {
            kind: LearnerKind::LogReg,
            features: features.iter().map(|s| s.to_string()).collect(),
            learning_rate,
            epochs,
            l2,
            seed: 0,
        }
    }

    pub(crate) fn check(&self, schema: &Schema) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::BadHyperparameters("feature subset is empty".into()));
        }
        for name in &self.features {
            let f = schema.feature(name).ok_or_else(|| Error::UnknownFeature(name.clone()))?;
            if f.kind != FeatureKind::Numeric {
                return Err(Error::BadHyperparameters(format!("feature `{name}` is not numeric")));
            }
        }
        if self.kind == LearnerKind::LogReg {
            if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                return Err(Error::BadHyperparameters("learning_rate must be positive".into()));
            }
            if self.epochs == 0 {
                return Err(Error::BadHyperparameters("epochs must be at least 1".into()));
            }
            if !(self.l2 >= 0.0 && self.l2.is_finite()) {
                return Err(Error::BadHyperparameters("l2 must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Trains whichever learner `spec` names.
pub fn train(samples: &[&Sample], schema: &Schema, spec: &LearnerSpec) -> Result<TrainedModel> {
    spec.check(schema)?;
    match spec.kind {
        LearnerKind::Stump => train_stump(samples, schema, &spec.features),
        LearnerKind::LogReg => train_logreg(samples, schema, spec),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub feature: String,
    pub mean: f64,
    pub std: f64,
}

impl FeatureStats {
    /// Population mean and standard deviation.
    pub(crate) fn from_values(feature: &str, values: &[f64]) -> FeatureStats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        FeatureStats { feature: feature.to_owned(), mean, std: var.sqrt() }
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StumpModel {
    pub feature: String,
    pub threshold: f64,
    pub left_label: Label,
    pub p_left: f64,
    pub p_right: f64,
    pub gain: f64,
    pub stats: Vec<FeatureStats>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// Features actually used, aligned with `weights` and `stats`.
    pub features: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub stats: Vec<FeatureStats>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Stump(StumpModel),
    LogReg(LogRegModel),
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            TrainedModel::Stump(_) => LearnerKind::Stump,
            TrainedModel::LogReg(_) => LearnerKind::LogReg,
        }
    }

    /// Features whose values the model reads.
    pub fn required_features(&self) -> Vec<&str> {
        match self {
            TrainedModel::Stump(m) => vec![m.feature.as_str()],
            TrainedModel::LogReg(m) => m.features.iter().map(String::as_str).collect(),
        }
    }

    pub fn dropped_features(&self) -> &[String] {
        match self {
            TrainedModel::Stump(m) => &m.dropped,
            TrainedModel::LogReg(m) => &m.dropped,
        }
    }

    /// Positive-class probability, or `None` when a required value is missing.
    pub fn score(&self, sample: &Sample, schema: &Schema) -> Result<Option<f64>> {
        match self {
            TrainedModel::Stump(m) => {
                Ok(schema.number(sample, &m.feature)?.map(|x| if x < m.threshold { m.p_left } else { m.p_right }))
            }
            TrainedModel::LogReg(m) => {
                let mut z = m.bias;
                for ((name, w), st) in m.features.iter().zip(&m.weights).zip(&m.stats) {
                    match schema.number(sample, name)? {
                        Some(x) => z += w * st.standardize(x),
                        None => return Ok(None),
                    }
                }
                Ok(Some(sigmoid(z)))
            }
        }
    }

    pub fn to_json(&self) -> Json {
        fn stats_json(stats: &[FeatureStats]) -> Json {
            stats.iter().map(|s| json!({"feature": s.feature, "mean": s.mean, "std": s.std})).collect()
        }
        match self {
            TrainedModel::Stump(m) => json!({
                "type": "stump",
                "feature": m.feature,
                "threshold": m.threshold,
                "left_label": m.left_label,
                "p_left": m.p_left,
                "p_right": m.p_right,
                "gain": m.gain,
                "standardization": stats_json(&m.stats),
                "dropped": m.dropped,
            }),
            TrainedModel::LogReg(m) => json!({
                "type": "logreg",
                "features": m.features,
                "weights": m.weights,
                "bias": m.bias,
                "standardization": stats_json(&m.stats),
                "dropped": m.dropped,
            }),
        }
    }

    pub(crate) fn from_json_at(doc: &Json, path: &str) -> Result<TrainedModel> {
        let mut r = ObjReader::new(doc, path)?;
        let kind = r.string("type")?;
        let stats = read_stats(&mut r)?;
        let dropped = read_strings(&mut r, "dropped")?;
        let model = match kind.as_str() {
            "stump" => {
                let feature = r.string("feature")?;
                let threshold = r.number("threshold")?;
                let left_label = Label::parse(&r.string("left_label")?, &r.field_path("left_label"))?;
                let p_left = read_probability(&mut r, "p_left")?;
                let p_right = read_probability(&mut r, "p_right")?;
                let gain = r.number("gain")?;
                TrainedModel::Stump(StumpModel {
                    feature,
                    threshold,
                    left_label,
                    p_left,
                    p_right,
                    gain,
                    stats,
                    dropped,
                })
            }
            "logreg" => {
                let features = read_strings(&mut r, "features")?;
                let wpath = r.field_path("weights");
                let weights = as_array(r.req("weights")?, &wpath)?
                    .iter()
                    .enumerate()
                    .map(|(i, w)| as_f64(w, &index(&wpath, i)))
                    .collect::<Result<Vec<_>>>()?;
                let bias = r.number("bias")?;
                if features.is_empty() {
                    return Err(Error::schema(r.field_path("features"), "logistic model needs at least one feature"));
                }
                if weights.len() != features.len() {
                    return Err(Error::schema(wpath, "weights must align with features"));
                }
                if stats.len() != features.len() || stats.iter().zip(&features).any(|(s, f)| &s.feature != f) {
                    return Err(Error::schema(r.field_path("standardization"), "stats must align with features"));
                }
                TrainedModel::LogReg(LogRegModel { features, weights, bias, stats, dropped })
            }
            other => {
                return Err(Error::schema(r.field_path("type"), format!("unknown model type `{other}`")));
            }
        };
        r.finish()?;
        Ok(model)
    }

    pub fn from_json(doc: &Json) -> Result<TrainedModel> {
        TrainedModel::from_json_at(doc, "$")
    }
}

fn read_probability(r: &mut ObjReader<'_>, key: &str) -> Result<f64> {
    let p = r.number(key)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::schema(r.field_path(key), "probability outside [0, 1]"));
    }
    Ok(p)
}

fn read_strings(r: &mut ObjReader<'_>, key: &str) -> Result<Vec<String>> {
    let path = r.field_path(key);
    as_array(r.req(key)?, &path)?
        .iter()
        .enumerate()
        .map(|(i, v)| as_str(v, &index(&path, i)).map(str::to_owned))
        .collect()
}

fn read_stats(r: &mut ObjReader<'_>) -> Result<Vec<FeatureStats>> {
    let path = r.field_path("standardization");
    as_array(r.req("standardization")?, &path)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut s = ObjReader::new(v, index(&path, i))?;
            let stats = FeatureStats { feature: s.string("feature")?, mean: s.number("mean")?, std: s.number("std")? };
            if stats.std <= 0.0 {
                return Err(Error::schema(s.field_path("std"), "standard deviation must be positive"));
            }
            s.finish()?;
            Ok(stats)
        })
        .collect()
}

/// Samples usable for a subset: all listed features present.
pub(crate) fn complete_rows<'a>(samples: &[&'a Sample], schema: &Schema, subset: &[String]) -> Result<Vec<&'a Sample>> {
    let mut out = Vec::with_capacity(samples.len());
    'rows: for s in samples {
        for name in subset {
            if schema.number(s, name)?.is_none() {
                continue 'rows;
            }
        }
        out.push(*s);
    }
    Ok(out)
}
