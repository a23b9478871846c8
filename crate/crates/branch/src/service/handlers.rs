use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value as Json;

use branch_core::dataset::Signature;
use branch_core::eval::EvalMode;
use branch_core::json::to_canonical_string;
use branch_core::learners::LearnerSpec;
use branch_core::store::{DatasetImport, Visibility, MIN_TOKEN_BYTES};
use branch_core::tree::{tree_from_value, CustomFeature};
use branch_core::Error;

use super::{ApiError, AppState, Caller};
use crate::ops;

type ApiResult = Result<Response, ApiError>;

fn json_response(status: StatusCode, value: &impl serde::Serialize) -> Response {
    (status, [(CONTENT_TYPE, "application/json")], to_canonical_string(value)).into_response()
}

fn ok(value: &impl serde::Serialize) -> ApiResult {
    Ok(json_response(StatusCode::OK, value))
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(ApiError::body)
}

pub async fn api_not_found() -> ApiError {
    ApiError::not_found("endpoint")
}

pub async fn list_datasets(State(state): State<AppState>) -> ApiResult {
    let snap = state.store.snapshot();
    let list: Vec<Json> = snap.datasets().into_iter().map(|d| d.descriptor()).collect();
    ok(&list)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportBody {
    csv: String,
    class_column: String,
    positive_name: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    test_csv: Option<String>,
}

impl From<ImportBody> for DatasetImport {
    fn from(b: ImportBody) -> DatasetImport {
        DatasetImport {
            name: b.name,
            description: b.description,
            csv: b.csv,
            class_column: b.class_column,
            positive_name: b.positive_name,
            companion_test_csv: b.test_csv,
        }
    }
}

/// Multipart form (`file`, `test_file`, `class_column`, `positive_name`,
/// `name`, `description`) or the same fields as a JSON object.
pub async fn import_dataset(State(state): State<AppState>, caller: Caller, req: Request) -> ApiResult {
    let token = caller.require()?;
    if token.len() < MIN_TOKEN_BYTES {
        return Err(Error::InvalidToken.into());
    }
    let is_multipart = req
        .headers()
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let body: ImportBody = if is_multipart {
        let mut form = Multipart::from_request(req, &state).await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        let mut b = ImportBody::default();
        let mut have_csv = false;
        while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request(e.body_text()))? {
            let name = field.name().unwrap_or_default().to_owned();
            let text = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
            match name.as_str() {
                "file" | "csv" => {
                    b.csv = text;
                    have_csv = true;
                }
                "test_file" | "test_csv" => b.test_csv = Some(text),
                "class_column" => b.class_column = text,
                "positive_name" => b.positive_name = text,
                "name" => b.name = text,
                "description" => b.description = text,
                other => return Err(ApiError::bad_request(format!("unknown form field `{other}`"))),
            }
        }
        if !have_csv {
            return Err(ApiError::bad_request("form field `file` is required"));
        }
        b
    } else {
        let bytes = Bytes::from_request(req, &state).await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        parse(&bytes)?
    };
    let rec = state.run(move |store| Ok(store.import_dataset(body.into())?)).await?;
    Ok(json_response(StatusCode::CREATED, &rec.descriptor()))
}

pub async fn get_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let snap = state.store.snapshot();
    let rec = snap.dataset(&id)?;
    ok(&ops::dataset_detail(rec, &snap))
}

#[derive(Debug, Deserialize)]
pub struct FeatureQuery {
    #[serde(default)]
    query: String,
}

pub async fn search_features(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FeatureQuery>,
) -> ApiResult {
    let snap = state.store.snapshot();
    let rec = snap.dataset(&id)?;
    ok(&rec.dataset.search_features(&q.query))
}

#[derive(Debug, Deserialize)]
pub struct PointsQuery {
    x: String,
    y: String,
}

pub async fn dataset_points(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PointsQuery>,
) -> ApiResult {
    let snap = state.store.snapshot();
    let rec = snap.dataset(&id)?;
    ok(&ops::scatter_points(&rec.dataset, &q.x, &q.y)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteBody {
    rule: Json,
}

/// Preview of how one rule routes the dataset's samples.
pub async fn preview_route(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let body: RouteBody = parse(&body)?;
    let doc = state
        .run(move |store| {
            let snap = store.snapshot();
            let rec = snap.dataset(&id)?;
            Ok(ops::route_preview(&snap, &rec.dataset, &body.rule, caller.token())?)
        })
        .await?;
    ok(&doc)
}

pub async fn list_custom_features(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let snap = state.store.snapshot();
    let rec = snap.dataset(&id)?;
    let list: Vec<Json> =
        snap.custom_features(rec.dataset.signature()).into_iter().map(ops::custom_feature_json).collect();
    ok(&list)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFeatureBody {
    name: String,
    weights: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    offset: f64,
}

pub async fn save_custom_feature(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    caller.require()?;
    let body: CustomFeatureBody = parse(&body)?;
    let saved = state
        .run(move |store| {
            let sig = store.snapshot().dataset(&id)?.dataset.signature().clone();
            let f = CustomFeature { name: Some(body.name), weights: body.weights, offset: body.offset };
            Ok(store.save_custom_feature(&sig, f)?)
        })
        .await?;
    Ok(json_response(StatusCode::CREATED, &ops::custom_feature_json(&saved)))
}

#[derive(Debug, Deserialize)]
pub struct TreeListQuery {
    signature: Option<String>,
}

pub async fn list_trees(State(state): State<AppState>, caller: Caller, Query(q): Query<TreeListQuery>) -> ApiResult {
    let snap = state.store.snapshot();
    let sig = q.signature.map(Signature);
    let list: Vec<Json> = snap
        .list_trees(caller.token(), sig.as_ref())
        .into_iter()
        .map(|r| ops::record_json(r, caller.token()))
        .collect();
    ok(&list)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SaveBody {
    tree: Json,
    #[serde(default)]
    visibility: Option<Visibility>,
}

fn decode_tree(body: &SaveBody) -> Result<branch_core::tree::DecisionTree, ApiError> {
    tree_from_value(&body.tree).map_err(|e| {
        let mut err = ApiError::from(e);
        // Locations inside the tree document are relative to `$.tree`.
        err.location = err.location.map(|l| l.replacen('$', "$.tree", 1));
        err
    })
}

/// Creates a tree (fresh id), or updates it when the body names an id the
/// caller can see.
pub async fn create_tree(State(state): State<AppState>, caller: Caller, body: Bytes) -> ApiResult {
    let token = caller.require()?.to_owned();
    let body: SaveBody = parse(&body)?;
    let tree = decode_tree(&body)?;
    let visibility = body.visibility;
    let (rec, created) = state
        .run(move |store| {
            let exists = !tree.id.is_empty() && store.snapshot().tree(&tree.id, Some(&token)).is_ok();
            if exists {
                let id = tree.id.clone();
                Ok((store.update_tree(&id, tree, &token, visibility)?, false))
            } else {
                Ok((store.create_tree(tree, &token, visibility.unwrap_or(Visibility::Private))?, true))
            }
        })
        .await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(json_response(status, &ops::record_json(&rec, caller.token())))
}

pub async fn update_tree(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let token = caller.require()?.to_owned();
    let body: SaveBody = parse(&body)?;
    let tree = decode_tree(&body)?;
    let visibility = body.visibility;
    let rec = state.run(move |store| Ok(store.update_tree(&id, tree, &token, visibility)?)).await?;
    ok(&ops::record_json(&rec, caller.token()))
}

pub async fn get_tree(State(state): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult {
    let snap = state.store.snapshot();
    ok(&ops::record_json(snap.tree(&id, caller.token())?, caller.token()))
}

pub async fn delete_tree(State(state): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult {
    let token = caller.require()?.to_owned();
    let deleted = id.clone();
    state.run(move |store| Ok(store.delete_tree(&id, &token)?)).await?;
    ok(&serde_json::json!({"deleted": deleted}))
}

#[derive(Debug, Deserialize)]
pub struct EvaluateQuery {
    dataset: Option<String>,
}

/// Body: an evaluation mode. `?dataset=` picks the data; by default the
/// oldest stored dataset with the tree's signature.
pub async fn evaluate_stored(
    State(state): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Query(q): Query<EvaluateQuery>,
    body: Bytes,
) -> ApiResult {
    let mode: EvalMode = parse(&body)?;
    let report = state
        .run(move |store| {
            let snap = store.snapshot();
            let tree = snap.tree(&id, caller.token())?.tree.clone();
            Ok(ops::evaluate_in_store(&snap, &tree, q.dataset.as_deref(), &mode)?)
        })
        .await?;
    ok(&report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkingBody {
    tree: Json,
    #[serde(default)]
    dataset_id: Option<String>,
    mode: EvalMode,
}

/// Evaluates an unsaved tree sent in the body.
pub async fn evaluate_working(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let body: WorkingBody = parse(&body)?;
    let tree = decode_tree(&SaveBody { tree: body.tree, visibility: None })?;
    let report = state
        .run(move |store| Ok(ops::evaluate_in_store(&store.snapshot(), &tree, body.dataset_id.as_deref(), &body.mode)?))
        .await?;
    ok(&report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainBody {
    dataset_id: String,
    spec: LearnerSpec,
}

pub async fn train_model(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let body: TrainBody = parse(&body)?;
    let model = state
        .run(move |store| {
            let snap = store.snapshot();
            let rec = snap.dataset(&body.dataset_id)?;
            Ok(ops::train_on(&rec.dataset, &body.spec)?)
        })
        .await?;
    ok(&model.to_json())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleBody {
    tree_ids: Vec<String>,
    #[serde(default)]
    dataset_id: Option<String>,
    mode: EvalMode,
}

pub async fn evaluate_ensemble(State(state): State<AppState>, caller: Caller, body: Bytes) -> ApiResult {
    let body: EnsembleBody = parse(&body)?;
    let report = state
        .run(move |store| {
            Ok(ops::ensemble_in_store(
                &store.snapshot(),
                &body.tree_ids,
                body.dataset_id.as_deref(),
                &body.mode,
                caller.token(),
            )?)
        })
        .await?;
    ok(&report)
}
