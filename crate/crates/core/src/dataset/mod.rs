//! Typed tabular datasets with one binary class column.

mod csv;
mod split;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::json::{as_array, as_f64, as_str, index, ObjReader};

pub use self::csv::parse_csv;
pub use self::split::{percentage_split, DataPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    pub(crate) fn parse(s: &str, path: &str) -> Result<Label> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(Error::schema(path, format!("unknown label `{other}`"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    /// Sorted; empty for numeric features.
    pub categories: Vec<String>,
    pub index: usize,
}

/// One cell of a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Category(String),
    Missing,
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<Value>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassLabeling {
    pub positive: String,
    pub negative: String,
}

impl ClassLabeling {
    pub fn name_of(&self, label: Label) -> &str {
        match label {
            Label::Positive => &self.positive,
            Label::Negative => &self.negative,
        }
    }
}

/// Hex SHA-256 over the sorted (feature name, kind) list and the class names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub String);

impl Signature {
    pub fn compute(features: &[FeatureDescriptor], labeling: &ClassLabeling) -> Signature {
        let mut named: Vec<(&str, &str)> = features.iter().map(|f| (f.name.as_str(), f.kind.as_str())).collect();
        named.sort_unstable();
        let doc = json!({
            "class": {"negative": labeling.negative, "positive": labeling.positive},
            "features": named,
        });
        let digest = Sha256::digest(serde_json::to_string(&doc).expect("json").as_bytes());
        Signature(hex::encode(digest))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Column layout of a dataset: feature descriptors plus class names.
#[derive(Debug, Clone)]
pub struct Schema {
    features: Vec<FeatureDescriptor>,
    by_name: HashMap<String, usize>,
    labeling: ClassLabeling,
    signature: Signature,
}

impl Schema {
    pub fn new(features: Vec<FeatureDescriptor>, labeling: ClassLabeling) -> Result<Schema> {
        if features.is_empty() {
            return Err(Error::EmptyDataset("no feature columns".into()));
        }
        if labeling.positive == labeling.negative {
            return Err(Error::BadClassColumn("class names must differ".into()));
        }
        let mut by_name = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::MalformedCsv(format!("column {i} has an empty name")));
            }
            if f.index != i {
                return Err(Error::MalformedCsv(format!("feature `{}` has index {} at position {i}", f.name, f.index)));
            }
            match f.kind {
                FeatureKind::Numeric if !f.categories.is_empty() => {
                    return Err(Error::MalformedCsv(format!("numeric feature `{}` lists categories", f.name)))
                }
                FeatureKind::Categorical if f.categories.is_empty() => {
                    return Err(Error::MalformedCsv(format!("categorical feature `{}` has no categories", f.name)))
                }
                _ => {}
            }
            if by_name.insert(f.name.clone(), i).is_some() {
                return Err(Error::MalformedCsv(format!("duplicate column `{}`", f.name)));
            }
        }
        let signature = Signature::compute(&features, &labeling);
        Ok(Schema { features, by_name, labeling, signature })
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureDescriptor> {
        self.by_name.get(name).map(|&i| &self.features[i])
    }

    pub fn labeling(&self) -> &ClassLabeling {
        &self.labeling
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Looks up `name` in a sample laid out by this schema.
    pub fn value<'s>(&self, sample: &'s Sample, name: &str) -> Result<&'s Value> {
        let i = *self.by_name.get(name).ok_or_else(|| Error::UnknownFeature(name.to_owned()))?;
        Ok(&sample.values[i])
    }

    /// Numeric value of `name`, or `None` when the cell is missing.
    pub fn number(&self, sample: &Sample, name: &str) -> Result<Option<f64>> {
        match self.value(sample, name)? {
            Value::Number(x) => Ok(Some(*x)),
            Value::Missing => Ok(None),
            Value::Category(_) => Err(Error::UnknownFeature(format!("{name} (not numeric)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub name: String,
    schema: Schema,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        schema: Schema,
        samples: Vec<Sample>,
    ) -> Result<Dataset> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset("no samples".into()));
        }
        for (row, s) in samples.iter().enumerate() {
            if s.values.len() != schema.features.len() {
                return Err(Error::MalformedCsv(format!(
                    "sample {row} has {} values, expected {}",
                    s.values.len(),
                    schema.features.len()
                )));
            }
            for (v, f) in s.values.iter().zip(&schema.features) {
                let ok = match (v, f.kind) {
                    (Value::Missing, _) => true,
                    (Value::Number(x), FeatureKind::Numeric) => x.is_finite(),
                    (Value::Category(c), FeatureKind::Categorical) => f.categories.binary_search(c).is_ok(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::MalformedCsv(format!("sample {row}: bad value for `{}`", f.name)));
                }
            }
        }
        Ok(Dataset { id: id.into(), name: name.into(), schema, samples })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.schema.features
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn labeling(&self) -> &ClassLabeling {
        &self.schema.labeling
    }

    pub fn signature(&self) -> &Signature {
        &self.schema.signature
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// (positive, negative) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        class_counts(&self.samples)
    }

    /// Samples at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Vec<&Sample> {
        indices.iter().map(|&i| &self.samples[i]).collect()
    }

    pub fn all(&self) -> Vec<&Sample> {
        self.samples.iter().collect()
    }

    /// Feature search backing the split-node search bar: case-insensitive
    /// substring match, ordered by match position then name.
    pub fn search_features(&self, query: &str) -> Vec<&FeatureDescriptor> {
        let needle = query.to_lowercase();
        let mut hits: Vec<(usize, &FeatureDescriptor)> =
            self.features().iter().filter_map(|f| f.name.to_lowercase().find(&needle).map(|pos| (pos, f))).collect();
        hits.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.name.cmp(&b.1.name)));
        hits.into_iter().map(|(_, f)| f).collect()
    }

    /// Writes the dataset back out as CSV with the class column last.
    pub fn to_csv(&self, class_column: &str) -> String {
        let mut w = ::csv::WriterBuilder::new().terminator(::csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header: Vec<&str> = self.features().iter().map(|f| f.name.as_str()).collect();
        header.push(class_column);
        w.write_record(&header).expect("in-memory write");
        for s in &self.samples {
            let mut row: Vec<String> = s
                .values
                .iter()
                .map(|v| match v {
                    Value::Number(x) => x.to_string(),
                    Value::Category(c) => c.clone(),
                    Value::Missing => String::new(),
                })
                .collect();
            row.push(self.labeling().name_of(s.label).to_owned());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Canonical JSON mirror: `{id, name, features, class, rows}` where each
    /// row holds the feature values followed by the class name.
    pub fn to_json(&self) -> Json {
        let features: Vec<Json> = self
            .features()
            .iter()
            .map(|f| json!({"name": f.name, "kind": f.kind.as_str(), "categories": f.categories}))
            .collect();
        let rows: Vec<Json> = self
            .samples
            .iter()
            .map(|s| {
                let mut row: Vec<Json> = s
                    .values
                    .iter()
                    .map(|v| match v {
                        Value::Number(x) => json!(x),
                        Value::Category(c) => json!(c),
                        Value::Missing => Json::Null,
                    })
                    .collect();
                row.push(json!(self.labeling().name_of(s.label)));
                Json::Array(row)
            })
            .collect();
        json!({
            "id": self.id,
            "name": self.name,
            "features": features,
            "class": {"positive": self.labeling().positive, "negative": self.labeling().negative},
            "rows": rows,
        })
    }

    pub fn from_json(doc: &Json) -> Result<Dataset> {
        let mut r = ObjReader::new(doc, "$")?;
        let id = r.string("id")?;
        let name = r.string("name")?;
        let class = r.req("class")?;
        let mut cr = ObjReader::new(class, "$.class")?;
        let labeling = ClassLabeling { positive: cr.string("positive")?, negative: cr.string("negative")? };
        cr.finish()?;

        let fpath = r.field_path("features");
        let mut features = Vec::new();
        for (i, f) in as_array(r.req("features")?, &fpath)?.iter().enumerate() {
            let p = index(&fpath, i);
            let mut fr = ObjReader::new(f, &p)?;
            let name = fr.string("name")?;
            let kind = match fr.string("kind")?.as_str() {
                "numeric" => FeatureKind::Numeric,
                "categorical" => FeatureKind::Categorical,
                other => return Err(Error::schema(fr.field_path("kind"), format!("unknown kind `{other}`"))),
            };
            let cpath = fr.field_path("categories");
            let categories = as_array(fr.req("categories")?, &cpath)?
                .iter()
                .enumerate()
                .map(|(j, c)| as_str(c, &index(&cpath, j)).map(str::to_owned))
                .collect::<Result<Vec<_>>>()?;
            fr.finish()?;
            features.push(FeatureDescriptor { name, kind, categories, index: i });
        }
        let schema = Schema::new(features, labeling)?;

        let rpath = r.field_path("rows");
        let mut samples = Vec::new();
        for (i, row) in as_array(r.req("rows")?, &rpath)?.iter().enumerate() {
            let p = index(&rpath, i);
            let cells = as_array(row, &p)?;
            if cells.len() != schema.features.len() + 1 {
                return Err(Error::schema(p, "row length does not match feature count + class"));
            }
            let (values, class) = cells.split_at(schema.features.len());
            let values = values
                .iter()
                .zip(&schema.features)
                .enumerate()
                .map(|(j, (v, f))| {
                    let cp = index(&p, j);
                    match (v, f.kind) {
                        (Json::Null, _) => Ok(Value::Missing),
                        (_, FeatureKind::Numeric) => as_f64(v, &cp).map(Value::Number),
                        (_, FeatureKind::Categorical) => as_str(v, &cp).map(|c| Value::Category(c.to_owned())),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let cp = index(&p, schema.features.len());
            let class = as_str(&class[0], &cp)?;
            let label = if class == schema.labeling.positive {
                Label::Positive
            } else if class == schema.labeling.negative {
                Label::Negative
            } else {
                return Err(Error::schema(cp, format!("unknown class `{class}`")));
            };
            samples.push(Sample { values, label });
        }
        r.finish()?;
        Dataset::new(id, name, schema, samples).map_err(|e| Error::schema("$", e.to_string()))
    }
}

/// Per-feature overview used to seed split thresholds in the builder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub name: String,
    pub kind: FeatureKind,
    pub missing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    /// Category → count, for categorical features.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<(String, usize)>,
}

impl Dataset {
    pub fn summary(&self) -> Vec<FeatureSummary> {
        self.features()
            .iter()
            .map(|f| {
                let cells = self.samples.iter().map(|s| &s.values[f.index]);
                let missing = cells.clone().filter(|v| v.is_missing()).count();
                let mut out = FeatureSummary {
                    name: f.name.clone(),
                    kind: f.kind,
                    missing,
                    min: None,
                    max: None,
                    median: None,
                    categories: Vec::new(),
                };
                match f.kind {
                    FeatureKind::Numeric => {
                        let mut xs: Vec<f64> = cells.filter_map(Value::as_number).collect();
                        xs.sort_by(f64::total_cmp);
                        if let (Some(lo), Some(hi)) = (xs.first(), xs.last()) {
                            out.min = Some(*lo);
                            out.max = Some(*hi);
                            let n = xs.len();
                            out.median =
                                Some(if n % 2 == 1 { xs[n / 2] } else { f64::midpoint(xs[n / 2 - 1], xs[n / 2]) });
                        }
                    }
                    FeatureKind::Categorical => {
                        out.categories = f
                            .categories
                            .iter()
                            .map(|c| {
                                (c.clone(), cells.clone().filter(|v| matches!(v, Value::Category(x) if x == c)).count())
                            })
                            .collect();
                    }
                }
                out
            })
            .collect()
    }
}

/// Read-only lookup of datasets by id, used for held-out test sets.
pub trait DatasetResolver {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>>;
}

impl<T: DatasetResolver + ?Sized> DatasetResolver for &T {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        (**self).resolve_dataset(id)
    }
}

impl DatasetResolver for HashMap<String, Arc<Dataset>> {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.get(id).cloned()
    }
}

/// Resolver with no datasets.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDatasets;

impl DatasetResolver for NoDatasets {
    fn resolve_dataset(&self, _id: &str) -> Option<Arc<Dataset>> {
        None
    }
}

pub(crate) fn class_counts(samples: &[Sample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.label.is_positive()).count();
    (pos, samples.len() - pos)
}

/// Sorted, deduplicated category list.
pub(crate) fn category_set<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    values.collect::<BTreeSet<_>>().into_iter().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_genes() -> Dataset {
        parse_csv("PSRC1,SRC,TP53,cls\n1,2,3,a\n4,5,6,b\n", "cls", "a").unwrap()
    }

    #[test]
    fn search_orders_by_position_then_name() {
        let d = three_genes();
        let names = |q: &str| d.search_features(q).iter().map(|f| f.name.clone()).collect::<Vec<_>>();
        assert_eq!(names("src"), ["SRC", "PSRC1"]);
        assert_eq!(names(""), ["PSRC1", "SRC", "TP53"]);
        assert!(names("zzz").is_empty());
        assert_eq!(names("P"), ["PSRC1", "TP53"]);
    }

    #[test]
    fn signature_ignores_column_order() {
        let a = parse_csv("x,y,cls\n1,q,p\n2,r,n\n", "cls", "p").unwrap();
        let b = parse_csv("y,cls,x\nq,p,1\nr,n,2\n", "cls", "p").unwrap();
        assert_eq!(a.signature(), b.signature());
        let c = parse_csv("x,y,cls\n1,2,p\n2,3,n\n", "cls", "p").unwrap();
        assert_ne!(a.signature(), c.signature(), "kind change must alter the signature");
        let d = parse_csv("x,y,cls\n1,q,n\n2,r,p\n", "cls", "n").unwrap();
        assert_ne!(a.signature(), d.signature(), "positive class is part of the signature");
    }

    #[test]
    fn json_mirror_round_trips() {
        let d = parse_csv("g1,g2,cls\n1.5,a,cancer\n2.0,b,normal\nNA,a,cancer\n", "cls", "cancer").unwrap();
        let doc = d.to_json();
        assert_eq!(doc["rows"][2], json!([null, "a", "cancer"]));
        let back = Dataset::from_json(&doc).unwrap();
        assert_eq!(back.samples(), d.samples());
        assert_eq!(back.signature(), d.signature());
        assert_eq!(back.to_json(), doc);
    }

    #[test]
    fn json_mirror_rejects_unknown_class() {
        let d = three_genes();
        let mut doc = d.to_json();
        doc["rows"][0][3] = json!("zebra");
        let err = Dataset::from_json(&doc).unwrap_err();
        assert_eq!(err.location(), Some("$.rows[0][3]"));
    }

    #[test]
    fn summary_medians_and_counts() {
        let d = parse_csv("x,g,c\n4,a,p\nNA,b,n\n1,a,n\n2,,p\n10,a,p\n", "c", "p").unwrap();
        let s = d.summary();
        assert_eq!((s[0].min, s[0].max, s[0].median, s[0].missing), (Some(1.0), Some(10.0), Some(3.0), 1));
        assert_eq!(s[1].categories, [("a".to_string(), 3), ("b".to_string(), 1)]);
        assert_eq!(s[1].missing, 1);
    }
}
