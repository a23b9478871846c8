#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use branch::service::{router, AppState};
use branch_core::store::Store;

pub const ALICE: &str = "alice-token-0123456789";
pub const BOB: &str = "bob-token-9876543210";

/// Serves `store` on an ephemeral local port from a background task.
pub async fn start(store: Arc<Store>) -> String {
    start_with_timeout(store, Duration::from_secs(30)).await
}

pub async fn start_with_timeout(store: Arc<Store>, timeout: Duration) -> String {
    let app = router(AppState { store, timeout }, None);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.body))
    }
}

pub async fn send(req: reqwest::RequestBuilder) -> Reply {
    let resp = req.send().await.expect("request");
    let status = resp.status().as_u16();
    Reply { status, body: resp.text().await.expect("body") }
}

pub fn client() -> reqwest::Client {
    reqwest::Client::new()
}

pub async fn get(base: &str, path: &str, token: Option<&str>) -> Reply {
    let mut req = client().get(format!("{base}{path}"));
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    send(req).await
}

pub async fn post(base: &str, path: &str, token: Option<&str>, body: &serde_json::Value) -> Reply {
    let mut req =
        client().post(format!("{base}{path}")).header("content-type", "application/json").body(body.to_string());
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    send(req).await
}

pub async fn put(base: &str, path: &str, token: Option<&str>, body: &serde_json::Value) -> Reply {
    let mut req =
        client().put(format!("{base}{path}")).header("content-type", "application/json").body(body.to_string());
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    send(req).await
}

pub async fn delete(base: &str, path: &str, token: Option<&str>) -> Reply {
    let mut req = client().delete(format!("{base}{path}"));
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    send(req).await
}
