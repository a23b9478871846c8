//! Run the HTTP service on an ephemeral port and talk to it: list datasets,
//! save a tree, evaluate it. `branch serve` does the same on a fixed port
//! with an on-disk store.

use std::sync::Arc;
use std::time::Duration;

use branch::demo;
use branch::service::{router, AppState};
use branch_core::store::Store;
use branch_core::tree::tree_to_value;
use serde_json::{json, Value};

const TOKEN: &str = "example-token-0123456789";

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(Store::in_memory());
    let rec = store.insert_dataset(demo::walkthrough_dataset(), "synthetic cohort")?;
    let app = router(AppState { store, timeout: Duration::from_secs(30) }, None);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, app).await });
    println!("listening on {base}");

    let http = reqwest::Client::new();
    let datasets: Value = serde_json::from_str(&http.get(format!("{base}/api/datasets")).send().await?.text().await?)?;
    println!(
        "GET /api/datasets -> {} dataset(s), first {}",
        datasets.as_array().map_or(0, Vec::len),
        datasets[0]["name"]
    );

    let tree = tree_to_value(&demo::walkthrough_tree(rec.dataset.signature()));
    let saved = http
        .post(format!("{base}/api/trees"))
        .bearer_auth(TOKEN)
        .header("content-type", "application/json")
        .body(json!({"tree": tree, "visibility": "public"}).to_string())
        .send()
        .await?;
    println!("POST /api/trees -> {}", saved.status());
    let saved: Value = serde_json::from_str(&saved.text().await?)?;
    let id = saved["id"].as_str().unwrap_or_default();

    let mode = json!({"percentageSplit": {"fraction": 0.66, "seed": 7}});
    let report = http
        .post(format!("{base}/api/trees/{id}/evaluate"))
        .header("content-type", "application/json")
        .body(mode.to_string())
        .send()
        .await?
        .text()
        .await?;
    println!("POST /api/trees/{{id}}/evaluate -> {report}");

    let missing = http.get(format!("{base}/api/trees/nope")).send().await?;
    println!("GET /api/trees/nope -> {} {}", missing.status(), missing.text().await?);
    Ok(())
}
