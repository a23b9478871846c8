//! JSON-over-HTTP service backing the tree builder UI.
//!
//! Every `/api` response body is the canonical JSON of the corresponding
//! library call (sorted keys, compact). Errors are `{status, code, message,
//! location?}`. Callers identify themselves with `Authorization: Bearer
//! <token>`; without one they may only read public records.

mod error;
mod handlers;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::response::Html;
use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

use branch_core::store::Store;

pub use self::error::{status_of, ApiError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub store: PathBuf,
    /// Directory holding the web bundle; a placeholder page is served when unset.
    pub assets: Option<PathBuf>,
    pub timeout: Duration,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            store: PathBuf::from("branch-store"),
            assets: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub timeout: Duration,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> AppState {
        AppState { store, timeout: DEFAULT_TIMEOUT }
    }

    /// Runs `f` on the blocking pool under the request time limit.
    pub(crate) async fn run<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Store) -> Result<T, ApiError> + Send + 'static,
    {
        let store = self.store.clone();
        let job = tokio::task::spawn_blocking(move || f(&store));
        match tokio::time::timeout(self.timeout, job).await {
            Err(_) => Err(ApiError::timeout()),
            Ok(Err(join)) => Err(ApiError::internal(join.to_string())),
            Ok(Ok(out)) => out,
        }
    }
}

/// The bearer token, if one was sent.
#[derive(Debug, Clone, Default)]
pub struct Caller(pub Option<String>);

impl Caller {
    pub fn token(&self) -> Option<&str> {
        self.0.as_deref()
    }

    /// Writes need a token.
    pub fn require(&self) -> Result<&str, ApiError> {
        self.token().ok_or_else(|| branch_core::Error::Unauthorized.into())
    }
}

impl<S: Send + Sync> FromRequestParts<S> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _state: &S) -> Result<Self, Self::Rejection> {
        let Some(value) = parts.headers.get(AUTHORIZATION) else {
            return Ok(Caller(None));
        };
        let text = value.to_str().map_err(|_| ApiError::from(branch_core::Error::Unauthorized))?;
        let token = text
            .strip_prefix("Bearer ")
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ApiError::from(branch_core::Error::Unauthorized))?;
        Ok(Caller(Some(token.to_owned())))
    }
}

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>Branch</title></head>\n<body><h1>Branch</h1><p>The tree builder bundle is not installed. Point <code>--assets</code> at a built web UI, or use the JSON API under <code>/api</code>.</p></body></html>\n";

/// All routes; static assets (or the placeholder page) outside `/api`.
pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    use handlers::*;
    let api = Router::new()
        .route("/datasets", get(list_datasets).post(import_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/features", get(search_features))
        .route("/datasets/{id}/points", get(dataset_points))
        .route("/datasets/{id}/route", post(preview_route))
        .route("/datasets/{id}/custom-features", get(list_custom_features).post(save_custom_feature))
        .route("/trees", get(list_trees).post(create_tree))
        .route("/trees/{id}", get(get_tree).put(update_tree).delete(delete_tree))
        .route("/trees/{id}/evaluate", post(evaluate_stored))
        .route("/evaluate", post(evaluate_working))
        .route("/models/train", post(train_model))
        .route("/ensemble/evaluate", post(evaluate_ensemble))
        .fallback(api_not_found)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match assets.filter(|p| p.is_dir()) {
        Some(dir) => app.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Binds the listener, returning the bound address and the server future.
pub async fn bind(
    config: &ServeConfig,
) -> std::io::Result<(SocketAddr, impl std::future::Future<Output = std::io::Result<()>>)> {
    let store = Store::open_dir(&config.store).map_err(|e| std::io::Error::other(format!("cannot open store: {e}")))?;
    let state = AppState { store: Arc::new(store), timeout: config.timeout };
    let app = router(state, config.assets.clone());
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    let addr = listener.local_addr()?;
    let server = async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    };
    Ok((addr, server))
}

/// Serves until interrupted.
pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let (addr, server) = bind(&config).await?;
    eprintln!("branch: listening on http://{addr} (store {})", config.store.display());
    server.await
}
