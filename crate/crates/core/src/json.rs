//! Canonical JSON output and a small path-tracking reader used by the
//! hand-written document decoders.
//!
//! Canonical form: object keys sorted, numbers in shortest round-trip
//! notation, compact separators. The on-disk variant is pretty-printed with a
//! trailing LF.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Serializes any value to compact canonical JSON.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    // Round-tripping through `Value` sorts keys (serde_json's map is ordered).
    let value = serde_json::to_value(value).expect("in-memory values always serialize");
    serde_json::to_string(&value).expect("Value serializes")
}

/// Pretty canonical JSON with a trailing newline, as written to the store.
pub fn to_canonical_document<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("in-memory values always serialize");
    let mut out = serde_json::to_string_pretty(&value).expect("Value serializes");
    out.push('\n');
    out
}

pub(crate) fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::schema("$", format!("invalid JSON: {e}")))
}

pub(crate) fn join(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

pub(crate) fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

/// Reads fields out of a JSON object, remembering which ones were consumed so
/// unknown keys can be rejected.
pub(crate) struct ObjReader<'a> {
    path: String,
    map: &'a Map<String, Value>,
    seen: BTreeSet<&'a str>,
}

impl<'a> ObjReader<'a> {
    pub fn new(value: &'a Value, path: impl Into<String>) -> Result<Self> {
        let path = path.into();
        match value {
            Value::Object(map) => Ok(ObjReader { path, map, seen: BTreeSet::new() }),
            _ => Err(Error::schema(path, "expected an object")),
        }
    }

    pub fn field_path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    pub fn opt(&mut self, key: &str) -> Option<&'a Value> {
        let (k, v) = self.map.get_key_value(key)?;
        self.seen.insert(k.as_str());
        Some(v)
    }

    pub fn req(&mut self, key: &str) -> Result<&'a Value> {
        self.opt(key).ok_or_else(|| Error::schema(self.field_path(key), "missing required field"))
    }

    pub fn string(&mut self, key: &str) -> Result<String> {
        let v = self.req(key)?;
        as_str(v, &self.field_path(key)).map(str::to_owned)
    }

    pub fn opt_string(&mut self, key: &str) -> Result<Option<String>> {
        match self.opt(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => as_str(v, &self.field_path(key)).map(|s| Some(s.to_owned())),
        }
    }

    pub fn number(&mut self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        as_f64(v, &self.field_path(key))
    }

    pub fn count(&mut self, key: &str) -> Result<u64> {
        let v = self.req(key)?;
        as_u64(v, &self.field_path(key))
    }

    /// Fails on the first key that was never read.
    pub fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.seen.contains(key.as_str()) {
                return Err(Error::schema(join(&self.path, key), "unknown field"));
            }
        }
        Ok(())
    }
}

pub(crate) fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::schema(path, "expected a string"))
}

pub(crate) fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| Error::schema(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(Error::schema(path, "number must be finite"));
    }
    Ok(x)
}

pub(crate) fn as_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::schema(path, "expected a non-negative integer"))
}

pub(crate) fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a [Value]> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| Error::schema(path, "expected an array"))
}
