//! The dataset and tree library.
//!
//! Every record is one canonical JSON document (`datasets/<id>.json`,
//! `trees/<id>.json`); `index.json` lists the live ids and holds the shared
//! custom-feature definitions. A write stores the record documents first and
//! the index last, so the index rewrite is the commit point: a crash in between
//! leaves at most an unreferenced file behind.
//!
//! Readers work on immutable [`Snapshot`]s; writers are serialized.

mod backend;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::dataset::{parse_csv, Dataset, DatasetResolver, FeatureKind, Signature};
use crate::error::{Error, Result};
use crate::json::{as_array, as_f64, as_str, parse_document, to_canonical_document, ObjReader};
use crate::tree::{tree_from_value, tree_to_value, validate_tree, CustomFeature, DecisionTree, TreeResolver};

pub use self::backend::{Backend, DirBackend, MemoryBackend};

const INDEX: &str = "index.json";
pub const MIN_TOKEN_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Private,
}

/// Salted SHA-256 of an owner token; the token itself is never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwnerHash {
    salt: String,
    hash: String,
}

impl OwnerHash {
    fn new(token: &str) -> OwnerHash {
        let salt = uuid::Uuid::new_v4().simple().to_string();
        let hash = Self::digest(&salt, token);
        OwnerHash { salt, hash }
    }

    fn digest(salt: &str, token: &str) -> String {
        let mut h = Sha256::new();
        h.update(salt.as_bytes());
        h.update([0u8]);
        h.update(token.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn matches(&self, token: &str) -> bool {
        Self::digest(&self.salt, token) == self.hash
    }
}

fn check_token(token: &str) -> Result<()> {
    if token.len() < MIN_TOKEN_BYTES {
        return Err(Error::InvalidToken);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRecord {
    pub tree: Arc<DecisionTree>,
    pub owner: OwnerHash,
    pub visibility: Visibility,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl TreeRecord {
    pub fn id(&self) -> &str {
        &self.tree.id
    }

    pub fn is_owned_by(&self, token: Option<&str>) -> bool {
        token.is_some_and(|t| self.owner.matches(t))
    }

    pub fn visible_to(&self, token: Option<&str>) -> bool {
        self.visibility == Visibility::Public || self.is_owned_by(token)
    }

    fn to_document(&self) -> Json {
        json!({
            "tree": tree_to_value(&self.tree),
            "owner": {"salt": self.owner.salt, "hash": self.owner.hash},
            "visibility": self.visibility,
            "created_at": format_timestamp(&self.created_at),
            "updated_at": format_timestamp(&self.updated_at),
        })
    }

    fn from_document(doc: &Json) -> Result<TreeRecord> {
        let mut r = ObjReader::new(doc, "$")?;
        let tree = tree_from_value(r.req("tree")?)?;
        let mut o = ObjReader::new(r.req("owner")?, "$.owner")?;
        let owner = OwnerHash { salt: o.string("salt")?, hash: o.string("hash")? };
        o.finish()?;
        let visibility = match r.string("visibility")?.as_str() {
            "public" => Visibility::Public,
            "private" => Visibility::Private,
            other => return Err(Error::schema("$.visibility", format!("unknown visibility `{other}`"))),
        };
        let created_at = parse_stamp(&r.string("created_at")?)?;
        let updated_at = parse_stamp(&r.string("updated_at")?)?;
        r.finish()?;
        Ok(TreeRecord { tree: Arc::new(tree), owner, visibility, created_at, updated_at })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub dataset: Arc<Dataset>,
    pub description: String,
    /// Held-out dataset imported alongside this one.
    pub companion_test_dataset_id: Option<String>,
    /// Set on a companion, naming the dataset it was imported with.
    pub companion_of: Option<String>,
    pub created_at: DateTime<Utc>,
}

impl DatasetRecord {
    pub fn id(&self) -> &str {
        &self.dataset.id
    }

    /// Listing entry: id, name, feature count, class names and linkage.
    pub fn descriptor(&self) -> Json {
        let d = &self.dataset;
        let (pos, neg) = d.class_counts();
        json!({
            "id": d.id,
            "name": d.name,
            "description": self.description,
            "signature": d.signature(),
            "feature_count": d.features().len(),
            "sample_count": d.len(),
            "class": {"positive": d.labeling().positive, "negative": d.labeling().negative},
            "class_counts": {"positive": pos, "negative": neg},
            "companion_test_dataset_id": self.companion_test_dataset_id,
            "companion_of": self.companion_of,
            "created_at": format_timestamp(&self.created_at),
        })
    }

    fn to_document(&self) -> Json {
        json!({
            "dataset": self.dataset.to_json(),
            "description": self.description,
            "companion_test_dataset_id": self.companion_test_dataset_id,
            "companion_of": self.companion_of,
            "created_at": format_timestamp(&self.created_at),
        })
    }

    fn from_document(doc: &Json) -> Result<DatasetRecord> {
        let mut r = ObjReader::new(doc, "$")?;
        let dataset = Dataset::from_json(r.req("dataset")?)?;
        let description = r.string("description")?;
        let companion_test_dataset_id = r.opt_string("companion_test_dataset_id")?;
        let companion_of = r.opt_string("companion_of")?;
        let created_at = parse_stamp(&r.string("created_at")?)?;
        r.finish()?;
        Ok(DatasetRecord {
            dataset: Arc::new(dataset),
            description,
            companion_test_dataset_id,
            companion_of,
            created_at,
        })
    }
}

/// RFC 3339 in UTC with only as many fractional digits as needed.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_stamp(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::CorruptStore(format!("bad timestamp `{s}`: {e}")))
}

/// Parameters of a CSV import.
#[derive(Debug, Clone, Default)]
pub struct DatasetImport {
    pub name: String,
    pub description: String,
    pub csv: String,
    pub class_column: String,
    pub positive_name: String,
    /// Optional held-out CSV with the same header and classes.
    pub companion_test_csv: Option<String>,
}

/// An immutable view of the library at one commit.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    datasets: BTreeMap<String, DatasetRecord>,
    trees: BTreeMap<String, TreeRecord>,
    /// signature → feature name → definition
    custom_features: BTreeMap<String, BTreeMap<String, CustomFeature>>,
}

impl Snapshot {
    /// All datasets, oldest first.
    pub fn datasets(&self) -> Vec<&DatasetRecord> {
        let mut out: Vec<_> = self.datasets.values().collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id().cmp(b.id())));
        out
    }

    pub fn dataset(&self, id: &str) -> Result<&DatasetRecord> {
        self.datasets.get(id).ok_or_else(|| Error::NotFound(format!("dataset `{id}`")))
    }

    /// Oldest dataset with the given signature, preferring ones that are not
    /// held-out companions.
    pub fn dataset_for_signature(&self, signature: &Signature) -> Option<&DatasetRecord> {
        let matching: Vec<_> = self.datasets().into_iter().filter(|d| d.dataset.signature() == signature).collect();
        matching.iter().find(|d| d.companion_of.is_none()).or(matching.first()).copied()
    }

    /// Public trees plus the caller's private ones, newest update first.
    pub fn list_trees(&self, token: Option<&str>, signature: Option<&Signature>) -> Vec<&TreeRecord> {
        let mut out: Vec<_> = self
            .trees
            .values()
            .filter(|r| r.visible_to(token))
            .filter(|r| signature.is_none_or(|s| &r.tree.dataset_signature == s))
            .collect();
        out.sort_by(|a, b| b.updated_at.cmp(&a.updated_at).then_with(|| a.id().cmp(b.id())));
        out
    }

    /// A tree the caller may see. Private trees of others are reported as
    /// absent rather than forbidden.
    pub fn tree(&self, id: &str, token: Option<&str>) -> Result<&TreeRecord> {
        self.trees.get(id).filter(|r| r.visible_to(token)).ok_or_else(|| Error::NotFound(format!("tree `{id}`")))
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn custom_features(&self, signature: &Signature) -> Vec<&CustomFeature> {
        self.custom_features.get(signature.as_str()).map(|m| m.values().collect()).unwrap_or_default()
    }

    /// Ids of stored trees that name `id` in a `treeref` rule.
    pub fn referrers(&self, id: &str) -> Vec<&str> {
        self.trees
            .values()
            .filter(|r| r.id() != id && r.tree.referenced_ids().contains(&id))
            .map(TreeRecord::id)
            .collect()
    }

    /// Resolver restricted to what `token` can see.
    pub fn visible_to<'a>(&'a self, token: Option<&'a str>) -> VisibleTrees<'a> {
        VisibleTrees { snapshot: self, token }
    }

    fn last_stamp(&self) -> Option<DateTime<Utc>> {
        let trees = self.trees.values().map(|r| r.updated_at);
        let datasets = self.datasets.values().map(|r| r.created_at);
        trees.chain(datasets).max()
    }

    fn index_document(&self) -> Json {
        let features: Map<String, Json> = self
            .custom_features
            .iter()
            .map(|(sig, defs)| {
                let defs: Map<String, Json> = defs
                    .iter()
                    .map(|(name, f)| (name.clone(), json!({"weights": f.weights, "offset": f.offset})))
                    .collect();
                (sig.clone(), Json::Object(defs))
            })
            .collect();
        json!({
            "datasets": self.datasets.keys().collect::<Vec<_>>(),
            "trees": self.trees.keys().collect::<Vec<_>>(),
            "custom_features": features,
        })
    }
}

impl TreeResolver for Snapshot {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        self.trees.get(id).map(|r| r.tree.clone())
    }
}

impl DatasetResolver for Snapshot {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.datasets.get(id).map(|r| r.dataset.clone())
    }
}

/// Trees one caller may reference.
pub struct VisibleTrees<'a> {
    snapshot: &'a Snapshot,
    token: Option<&'a str>,
}

impl TreeResolver for VisibleTrees<'_> {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        self.snapshot.tree(id, self.token).ok().map(|r| r.tree.clone())
    }
}

pub struct Store {
    backend: Box<dyn Backend>,
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").finish_non_exhaustive()
    }
}

impl Store {
    /// Opens (creating if needed) a directory-backed store.
    pub fn open_dir(root: impl Into<PathBuf>) -> Result<Store> {
        Store::open(Box::new(DirBackend::open(root)?))
    }

    pub fn in_memory() -> Store {
        Store::open(Box::new(MemoryBackend::new())).expect("an empty memory backend always opens")
    }

    /// Loads every record listed in the index.
    pub fn open(backend: Box<dyn Backend>) -> Result<Store> {
        let mut snap = Snapshot::default();
        if let Some(bytes) = backend.read(INDEX)? {
            let index = read_doc(&bytes, INDEX)?;
            let corrupt = |e: Error| Error::CorruptStore(format!("{INDEX}: {e}"));
            let mut r = ObjReader::new(&index, "$").map_err(corrupt)?;
            for (i, id) in
                as_array(r.req("datasets").map_err(corrupt)?, "$.datasets").map_err(corrupt)?.iter().enumerate()
            {
                let id = as_str(id, &format!("$.datasets[{i}]")).map_err(corrupt)?;
                let key = format!("datasets/{id}.json");
                let rec = DatasetRecord::from_document(&load(&*backend, &key)?)
                    .map_err(|e| Error::CorruptStore(format!("{key}: {e}")))?;
                snap.datasets.insert(id.to_owned(), rec);
            }
            for (i, id) in as_array(r.req("trees").map_err(corrupt)?, "$.trees").map_err(corrupt)?.iter().enumerate() {
                let id = as_str(id, &format!("$.trees[{i}]")).map_err(corrupt)?;
                let key = format!("trees/{id}.json");
                let rec = TreeRecord::from_document(&load(&*backend, &key)?)
                    .map_err(|e| Error::CorruptStore(format!("{key}: {e}")))?;
                snap.trees.insert(id.to_owned(), rec);
            }
            let features = r.req("custom_features").map_err(corrupt)?;
            snap.custom_features = read_custom_features(features).map_err(corrupt)?;
            r.finish().map_err(corrupt)?;
        }
        Ok(Store { backend, current: RwLock::new(Arc::new(snap)), writer: Mutex::new(()) })
    }

    /// The current commit; later writes do not affect it.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("poisoned").clone()
    }

    /// Every stored document as `(key, bytes)`, including the index.
    pub fn export(&self) -> Result<BTreeMap<String, Vec<u8>>> {
        let _w = self.writer.lock().expect("poisoned");
        let snap = self.snapshot();
        let mut keys: Vec<String> = vec![INDEX.to_owned()];
        keys.extend(snap.datasets.keys().map(|id| format!("datasets/{id}.json")));
        keys.extend(snap.trees.keys().map(|id| format!("trees/{id}.json")));
        let mut out = BTreeMap::new();
        for key in keys {
            let bytes = self.backend.read(&key)?.ok_or_else(|| Error::CorruptStore(format!("{key} is missing")))?;
            out.insert(key, bytes);
        }
        Ok(out)
    }

    /// Parses and stores a CSV (plus optional held-out companion). Every
    /// import gets a fresh id, even for byte-identical content.
    pub fn import_dataset(&self, req: DatasetImport) -> Result<DatasetRecord> {
        let mut main = parse_csv(&req.csv, &req.class_column, &req.positive_name)?;
        let companion = match &req.companion_test_csv {
            Some(text) => {
                let c = parse_csv(text, &req.class_column, &req.positive_name)?;
                if c.signature() != main.signature() {
                    return Err(Error::SignatureMismatch(
                        "companion test CSV has a different header or classes".into(),
                    ));
                }
                Some(c)
            }
            None => None,
        };
        main.id = fresh_id();
        main.name = req.name.clone();
        let companion = companion.map(|mut c| {
            c.id = fresh_id();
            c.name = format!("{} (test)", req.name);
            c
        });
        self.commit(|snap, clock| {
            let now = clock.tick();
            let companion_id = companion.as_ref().map(|c| c.id.clone());
            if let Some(c) = companion {
                let rec = DatasetRecord {
                    dataset: Arc::new(c),
                    description: req.description.clone(),
                    companion_test_dataset_id: None,
                    companion_of: Some(main.id.clone()),
                    created_at: now,
                };
                snap.datasets.insert(rec.id().to_owned(), rec);
            }
            let rec = DatasetRecord {
                dataset: Arc::new(main),
                description: req.description,
                companion_test_dataset_id: companion_id,
                companion_of: None,
                created_at: now,
            };
            snap.datasets.insert(rec.id().to_owned(), rec.clone());
            let mut keys: Vec<String> = vec![format!("datasets/{}.json", rec.id())];
            keys.extend(rec.companion_test_dataset_id.iter().map(|c| format!("datasets/{c}.json")));
            Ok((rec, keys))
        })
    }

    /// Stores an already-parsed dataset under its own id.
    pub fn insert_dataset(&self, dataset: Dataset, description: &str) -> Result<DatasetRecord> {
        self.commit(|snap, clock| {
            let rec = DatasetRecord {
                dataset: Arc::new(dataset),
                description: description.to_owned(),
                companion_test_dataset_id: None,
                companion_of: None,
                created_at: clock.tick(),
            };
            snap.datasets.insert(rec.id().to_owned(), rec.clone());
            Ok((rec.clone(), vec![format!("datasets/{}.json", rec.id())]))
        })
    }

    /// Creates a record when `tree.id` is empty or unknown (a fresh id is
    /// assigned), otherwise updates the existing one.
    pub fn save_tree(&self, tree: DecisionTree, token: &str, visibility: Visibility) -> Result<TreeRecord> {
        if !tree.id.is_empty() && self.snapshot().trees.contains_key(&tree.id) {
            let id = tree.id.clone();
            self.update_tree(&id, tree, token, Some(visibility))
        } else {
            self.create_tree(tree, token, visibility)
        }
    }

    pub fn create_tree(&self, mut tree: DecisionTree, token: &str, visibility: Visibility) -> Result<TreeRecord> {
        check_token(token)?;
        if !tree.id.is_empty() && tree.referenced_ids().contains(&tree.id.as_str()) {
            return Err(Error::CyclicReference(vec![tree.id.clone(), tree.id.clone()]));
        }
        tree.id = fresh_id();
        self.commit(|snap, clock| {
            check_tree(snap, &tree, token)?;
            let now = clock.tick();
            tree.created_at = Some(now);
            tree.modified_at = Some(now);
            let rec = TreeRecord {
                tree: Arc::new(tree),
                owner: OwnerHash::new(token),
                visibility,
                created_at: now,
                updated_at: now,
            };
            snap.trees.insert(rec.id().to_owned(), rec.clone());
            let key = format!("trees/{}.json", rec.id());
            Ok((rec, vec![key]))
        })
    }

    /// Owner-only replacement of a stored tree; `visibility` of `None` keeps
    /// the current setting.
    pub fn update_tree(
        &self,
        id: &str,
        mut tree: DecisionTree,
        token: &str,
        visibility: Option<Visibility>,
    ) -> Result<TreeRecord> {
        check_token(token)?;
        self.commit(|snap, clock| {
            let old = snap.tree(id, Some(token))?.clone();
            if !old.owner.matches(token) {
                return Err(Error::NotOwner(id.to_owned()));
            }
            tree.id = id.to_owned();
            check_tree(snap, &tree, token)?;
            let now = clock.tick();
            tree.created_at = Some(old.created_at);
            tree.modified_at = Some(now);
            let rec = TreeRecord {
                tree: Arc::new(tree),
                owner: old.owner,
                visibility: visibility.unwrap_or(old.visibility),
                created_at: old.created_at,
                updated_at: now,
            };
            snap.trees.insert(id.to_owned(), rec.clone());
            Ok((rec, vec![format!("trees/{id}.json")]))
        })
    }

    /// Owner-only removal; refused while another tree references it.
    pub fn delete_tree(&self, id: &str, token: &str) -> Result<()> {
        check_token(token)?;
        let _w = self.writer.lock().expect("poisoned");
        let mut snap = (*self.snapshot()).clone();
        let rec = snap.tree(id, Some(token))?;
        if !rec.owner.matches(token) {
            return Err(Error::NotOwner(id.to_owned()));
        }
        if !snap.referrers(id).is_empty() {
            return Err(Error::InUse(id.to_owned()));
        }
        snap.trees.remove(id);
        self.backend.write(INDEX, to_canonical_document(&snap.index_document()).as_bytes())?;
        self.backend.remove(&format!("trees/{id}.json"))?;
        *self.current.write().expect("poisoned") = Arc::new(snap);
        Ok(())
    }

    /// Registers (or replaces) a named linear combination for every dataset
    /// with `signature`.
    pub fn save_custom_feature(&self, signature: &Signature, feature: CustomFeature) -> Result<CustomFeature> {
        let name = feature
            .name
            .clone()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::schema("$.name", "custom feature needs a name"))?;
        if feature.weights.is_empty() {
            return Err(Error::schema("$.weights", "custom feature needs at least one weight"));
        }
        if !feature.offset.is_finite() || feature.weights.values().any(|w| !w.is_finite()) {
            return Err(Error::schema("$.weights", "weights and offset must be finite"));
        }
        let _w = self.writer.lock().expect("poisoned");
        let mut snap = (*self.snapshot()).clone();
        let schema = snap
            .dataset_for_signature(signature)
            .ok_or_else(|| Error::NotFound(format!("dataset with signature `{signature}`")))?
            .dataset
            .schema()
            .clone();
        for f in feature.weights.keys() {
            match schema.feature(f) {
                None => return Err(Error::UnknownFeature(f.clone())),
                Some(d) if d.kind != FeatureKind::Numeric => {
                    return Err(Error::schema(
                        format!("$.weights.{f}"),
                        "custom features combine numeric features only",
                    ))
                }
                _ => {}
            }
        }
        snap.custom_features.entry(signature.as_str().to_owned()).or_default().insert(name, feature.clone());
        self.backend.write(INDEX, to_canonical_document(&snap.index_document()).as_bytes())?;
        *self.current.write().expect("poisoned") = Arc::new(snap);
        Ok(feature)
    }

    /// Runs one serialized write: `f` edits a copy of the current snapshot
    /// and names the record documents it touched; those are written, then the
    /// index, then the copy becomes current.
    fn commit<R>(&self, f: impl FnOnce(&mut Snapshot, &mut Clock) -> Result<(R, Vec<String>)>) -> Result<R> {
        let _w = self.writer.lock().expect("poisoned");
        let mut snap = (*self.snapshot()).clone();
        let mut clock = Clock { last: snap.last_stamp() };
        let (out, keys) = f(&mut snap, &mut clock)?;
        for key in keys {
            let doc = match key.strip_prefix("trees/") {
                Some(rest) => snap.trees[rest.trim_end_matches(".json")].to_document(),
                None => snap.datasets[key.trim_start_matches("datasets/").trim_end_matches(".json")].to_document(),
            };
            self.backend.write(&key, to_canonical_document(&doc).as_bytes())?;
        }
        self.backend.write(INDEX, to_canonical_document(&snap.index_document()).as_bytes())?;
        *self.current.write().expect("poisoned") = Arc::new(snap);
        Ok(out)
    }
}

impl TreeResolver for Store {
    fn resolve_tree(&self, id: &str) -> Option<Arc<DecisionTree>> {
        self.snapshot().resolve_tree(id)
    }
}

impl DatasetResolver for Store {
    fn resolve_dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.snapshot().resolve_dataset(id)
    }
}

/// Hands out strictly increasing timestamps.
struct Clock {
    last: Option<DateTime<Utc>>,
}

impl Clock {
    fn tick(&mut self) -> DateTime<Utc> {
        let now = Utc::now();
        let t = match self.last {
            Some(last) if now <= last => last + Duration::microseconds(1),
            _ => now,
        };
        self.last = Some(t);
        t
    }
}

fn fresh_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Validates `tree` against a stored dataset with its signature, resolving
/// references only through trees `token` can see.
fn check_tree(snap: &Snapshot, tree: &DecisionTree, token: &str) -> Result<()> {
    let ds = snap.dataset_for_signature(&tree.dataset_signature).ok_or_else(|| {
        Error::SignatureMismatch(format!("no stored dataset has signature `{}`", tree.dataset_signature))
    })?;
    validate_tree(tree, ds.dataset.schema(), &snap.visible_to(Some(token))).map_err(Error::from_issues)
}

fn read_doc(bytes: &[u8], key: &str) -> Result<Json> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::CorruptStore(format!("{key} is not UTF-8")))?;
    parse_document(text).map_err(|e| Error::CorruptStore(format!("{key}: {e}")))
}

fn load(backend: &dyn Backend, key: &str) -> Result<Json> {
    let bytes =
        backend.read(key)?.ok_or_else(|| Error::CorruptStore(format!("{key} is listed in the index but missing")))?;
    read_doc(&bytes, key)
}

fn read_custom_features(v: &Json) -> Result<BTreeMap<String, BTreeMap<String, CustomFeature>>> {
    let obj = v.as_object().ok_or_else(|| Error::schema("$.custom_features", "expected an object"))?;
    let mut out = BTreeMap::new();
    for (sig, defs) in obj {
        let path = format!("$.custom_features.{sig}");
        let defs = defs.as_object().ok_or_else(|| Error::schema(&path, "expected an object"))?;
        let mut m = BTreeMap::new();
        for (name, def) in defs {
            let dpath = format!("{path}.{name}");
            let mut r = ObjReader::new(def, &dpath)?;
            let wpath = r.field_path("weights");
            let wobj = r.req("weights")?.as_object().ok_or_else(|| Error::schema(&wpath, "expected an object"))?;
            let weights = wobj
                .iter()
                .map(|(k, w)| Ok((k.clone(), as_f64(w, &format!("{wpath}.{k}"))?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let offset = r.number("offset")?;
            r.finish()?;
            m.insert(name.clone(), CustomFeature { name: Some(name.clone()), weights, offset });
        }
        out.insert(sig.clone(), m);
    }
    Ok(out)
}
