use sha2::{Digest, Sha256};

use super::{category_set, ClassLabeling, Dataset, FeatureDescriptor, FeatureKind, Label, Sample, Schema, Value};
use crate::error::{Error, Result};

const MISSING_TOKEN: &str = "NA";

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == MISSING_TOKEN
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses a headed, comma-separated table.
///
/// A column is numeric when every non-missing cell parses as a finite number,
/// otherwise categorical. Empty cells and `NA` are missing. The dataset id is
/// derived from the content hash so re-parsing the same text is stable; the
/// store replaces it with a fresh id on import.
pub fn parse_csv(text: &str, class_column: &str, positive_name: &str) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::EmptyDataset("input is empty".into()));
    }
    let mut reader = ::csv::ReaderBuilder::new().has_headers(false).trim(::csv::Trim::All).from_reader(text.as_bytes());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            ::csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                Error::MalformedCsv(format!("row {} has {len} fields, header has {expected_len}", line))
            }
            _ => Error::MalformedCsv(e.to_string()),
        })?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    let mut rows = rows.into_iter();
    let header = rows.next().ok_or_else(|| Error::EmptyDataset("no header row".into()))?;
    let body: Vec<Vec<String>> = rows.collect();
    if body.is_empty() {
        return Err(Error::EmptyDataset("header without data rows".into()));
    }

    let class_idx = header
        .iter()
        .position(|h| h == class_column)
        .ok_or_else(|| Error::BadClassColumn(format!("column `{class_column}` not in header")))?;
    if header.iter().filter(|h| *h == class_column).count() > 1 {
        return Err(Error::MalformedCsv(format!("duplicate column `{class_column}`")));
    }

    let mut class_values: Vec<&str> = Vec::new();
    for (i, row) in body.iter().enumerate() {
        let cell = row[class_idx].as_str();
        if is_missing(cell) {
            return Err(Error::BadClassColumn(format!("row {} has no class value", i + 1)));
        }
        if !class_values.contains(&cell) {
            class_values.push(cell);
        }
    }
    if class_values.len() != 2 {
        return Err(Error::BadClassColumn(format!(
            "expected exactly 2 class values, found {}: {:?}",
            class_values.len(),
            class_values
        )));
    }
    if !class_values.contains(&positive_name) {
        return Err(Error::BadClassColumn(format!("positive class `{positive_name}` not among {class_values:?}")));
    }
    let negative = class_values.iter().find(|v| **v != positive_name).expect("two distinct values");
    let labeling = ClassLabeling { positive: positive_name.to_owned(), negative: (*negative).to_owned() };

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != class_idx).collect();
    let mut features = Vec::with_capacity(feature_cols.len());
    for (index, &col) in feature_cols.iter().enumerate() {
        let cells = || body.iter().map(|r| r[col].as_str()).filter(|c| !is_missing(c));
        let numeric = cells().all(|c| parse_number(c).is_some());
        let (kind, categories) = if numeric {
            (FeatureKind::Numeric, Vec::new())
        } else {
            (FeatureKind::Categorical, category_set(cells()))
        };
        features.push(FeatureDescriptor { name: header[col].clone(), kind, categories, index });
    }
    let schema = Schema::new(features, labeling)?;

    let samples = body
        .iter()
        .map(|row| {
            let values = feature_cols
                .iter()
                .zip(schema.features())
                .map(|(&col, f)| {
                    let cell = row[col].as_str();
                    if is_missing(cell) {
                        Value::Missing
                    } else if f.kind == FeatureKind::Numeric {
                        Value::Number(parse_number(cell).expect("column typed numeric"))
                    } else {
                        Value::Category(cell.to_owned())
                    }
                })
                .collect();
            let label = if row[class_idx] == positive_name { Label::Positive } else { Label::Negative };
            Sample { values, label }
        })
        .collect();

    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    Dataset::new(format!("csv-{}", &digest[..16]), "", schema, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_kinds_and_missing() {
        let d = parse_csv("g1,g2,cls\n1.5,a,cancer\n2.0,b,normal\nNA,a,cancer\n", "cls", "cancer").unwrap();
        let f = d.features();
        assert_eq!(f[0].kind, FeatureKind::Numeric);
        assert_eq!(f[1].kind, FeatureKind::Categorical);
        assert_eq!(f[1].categories, ["a", "b"]);
        assert_eq!(d.samples()[2].values[0], Value::Missing);
        let labels: Vec<_> = d.samples().iter().map(|s| s.label).collect();
        assert_eq!(labels, [Label::Positive, Label::Negative, Label::Positive]);
        assert_eq!(d.labeling().negative, "normal");
    }

    #[test]
    fn single_class_is_rejected() {
        let err = parse_csv("x,cls\n1,yes\n2,yes\n", "cls", "yes").unwrap_err();
        assert_eq!(err.code(), "BadClassColumn");
    }

    #[test]
    fn numeric_column_with_four_rows() {
        let d = parse_csv("x,cls\n1\t,p\n-2.5,n\n3e2,p\n+4,n\n", "cls", "p").unwrap();
        assert_eq!(d.features()[0].kind, FeatureKind::Numeric);
        assert_eq!(d.len(), 4);
        assert_eq!(d.samples()[2].values[0], Value::Number(300.0));
    }

    #[test]
    fn error_paths() {
        assert_eq!(parse_csv("", "c", "p").unwrap_err().code(), "EmptyDataset");
        assert_eq!(parse_csv("x,c\n", "c", "p").unwrap_err().code(), "EmptyDataset");
        assert_eq!(parse_csv("x,c\n1,p,9\n2,n\n", "c", "p").unwrap_err().code(), "MalformedCsv");
        assert_eq!(parse_csv("x,c\n1,p\n2,n\n", "nope", "p").unwrap_err().code(), "BadClassColumn");
        assert_eq!(parse_csv("x,c\n1,p\n2,NA\n3,n\n", "c", "p").unwrap_err().code(), "BadClassColumn");
        assert_eq!(parse_csv("x,c\n1,p\n2,q\n3,n\n", "c", "p").unwrap_err().code(), "BadClassColumn");
        assert_eq!(parse_csv("x,c\n1,a\n2,b\n", "c", "p").unwrap_err().code(), "BadClassColumn");
        assert_eq!(parse_csv("x,x,c\n1,1,a\n2,2,b\n", "c", "a").unwrap_err().code(), "MalformedCsv");
        assert_eq!(parse_csv("c\na\nb\n", "c", "a").unwrap_err().code(), "EmptyDataset");
    }

    #[test]
    fn non_finite_text_makes_column_categorical() {
        let d = parse_csv("x,c\ninf,a\n1,b\n", "c", "a").unwrap();
        assert_eq!(d.features()[0].kind, FeatureKind::Categorical);
    }

    #[test]
    fn quoted_fields_and_lowercase_na() {
        let d = parse_csv("\"gene, long\",c\n\"na\",a\n\"x,y\",b\n", "c", "a").unwrap();
        assert_eq!(d.features()[0].name, "gene, long");
        assert_eq!(d.features()[0].categories, ["na", "x,y"]);
    }

    #[test]
    fn all_missing_column_is_numeric() {
        let d = parse_csv("x,y,c\nNA,1,a\n,2,b\n", "c", "a").unwrap();
        assert_eq!(d.features()[0].kind, FeatureKind::Numeric);
    }
}
