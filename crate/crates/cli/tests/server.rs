use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use space_cli::server::{router, AppState, ServerConfig};
use space_core::sessionlog::{write_archive, write_session};
use space_core::studysim::{simulate_cohort, CohortConfig};
use tower::ServiceExt;

const BOUNDARY: &str = "space-test-boundary";

fn fixture_zip() -> &'static [u8] {
    static ZIP: OnceLock<Vec<u8>> = OnceLock::new();
    ZIP.get_or_init(|| {
        let mut c = CohortConfig::default();
        c.n_per_cell = 2;
        c.female_extra = 0;
        c.reliability_target = None;
        c.moca.planted_week3_slope = 0.0;
        c.supervised = None;
        let ds = simulate_cohort(&c).unwrap();
        write_archive(ds.logs().map(|l| (l.entry_name(), write_session(l).unwrap()))).unwrap()
    })
}

fn make_app(config: ServerConfig) -> (Arc<AppState>, Router) {
    let state = AppState::new(config);
    (Arc::clone(&state), router(state))
}

fn multipart(files: &[(&str, &[u8])]) -> Body {
    let mut body = Vec::new();
    for (name, bytes) in files {
        body.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"files\"; filename=\"{name}\"\r\n\
                 Content-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Body::from(body)
}

async fn send(app: &Router, request: Request<Body>) -> (StatusCode, Vec<u8>) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn upload(app: &Router, files: &[(&str, &[u8])]) -> (StatusCode, Value) {
    let request = Request::post("/api/batches")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(multipart(files))
        .unwrap();
    let (status, body) = send(app, request).await;
    (status, serde_json::from_slice(&body).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn export(app: &Router, id: &str, request: Value) -> (StatusCode, Vec<u8>) {
    let request = Request::post(format!("/api/batches/{id}/export"))
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(request.to_string()))
        .unwrap();
    send(app, request).await
}

fn batch_id(body: &Value) -> String {
    body["batch_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn upload_lists_every_entry() {
    let (_, app) = make_app(ServerConfig::default());
    let (status, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["n_ok"], 36);
    assert_eq!(body["n_error"], 0);
    let entries = body["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 36);
    assert!(entries.iter().all(|e| e["status"] == "ok"));
}

#[tokio::test]
async fn mixed_upload_keeps_the_good_entries() {
    let (_, app) = make_app(ServerConfig::default());
    let good = write_session(&space_core::fixtures::week_one_log()).unwrap();
    let zip = write_archive([("a.json", good.as_slice()), ("b.json", b"{}".as_slice())]).unwrap();
    let (status, body) = upload(&app, &[("mixed.zip", &zip), ("loose.json", b"not json")]).await;
    assert_eq!(status, StatusCode::CREATED);
    let statuses: Vec<(&str, &str)> = body["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["name"].as_str().unwrap(), e["status"].as_str().unwrap()))
        .collect();
    assert_eq!(statuses, [("a.json", "ok"), ("b.json", "error"), ("loose.json", "error")]);
    assert_eq!(body["entries"][1]["error_kind"], "validation");
    assert_eq!(body["entries"][2]["error_kind"], "parse");

    let (status, _) = get(&app, &format!("/api/batches/{}", batch_id(&body))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn upload_without_any_valid_log_creates_no_batch() {
    let (state, app) = make_app(ServerConfig::default());
    let (status, body) = upload(&app, &[("junk.json", b"[]")]).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body.get("batch_id").is_none());
    assert_eq!(state.batch_count(), 0);
}

#[tokio::test]
async fn non_multipart_upload_is_a_client_error() {
    let (_, app) = make_app(ServerConfig::default());
    let request = Request::post("/api/batches").body(Body::from("hello")).unwrap();
    let (status, _) = send(&app, request).await;
    assert!(status.is_client_error(), "{status}");
}

#[tokio::test]
async fn catalog_before_upload_is_not_found() {
    let (_, app) = make_app(ServerConfig::default());
    let (status, body) = get(&app, "/api/batches/b000001/catalog?mode=quick_summary").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let body: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(body["error"]["kind"], "unknown_batch");
}

#[tokio::test]
async fn catalog_follows_the_mode() {
    let (_, app) = make_app(ServerConfig::default());
    let (_, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    let id = batch_id(&body);
    let (status, quick) = get(&app, &format!("/api/batches/{id}/catalog?mode=quick_summary")).await;
    assert_eq!(status, StatusCode::OK);
    let quick: Value = serde_json::from_slice(&quick).unwrap();
    let columns: Vec<&str> = quick["groups"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|g| g["variables"].as_array().unwrap())
        .map(|v| v["column_name"].as_str().unwrap())
        .collect();
    assert_eq!(columns, space_core::export::QUICK_SUMMARY_COLUMNS);
    let (status, detailed) = get(&app, &format!("/api/batches/{id}/catalog?mode=detailed")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&detailed).unwrap()["mode"], "detailed");
    let (status, _) = get(&app, &format!("/api/batches/{id}/catalog?mode=everything")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn export_with_columns_of_another_mode_is_rejected() {
    let (_, app) = make_app(ServerConfig::default());
    let (_, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    let id = batch_id(&body);
    let request = json!({"mode": "quick_summary", "selected_columns": ["participant_id", "player_trial_kind"]});
    let (status, body) = export(&app, &id, request).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let body: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(body["error"]["kind"], "unknown_columns");
    assert_eq!(body["error"]["details"], json!(["player_trial_kind"]));

    let (status, _) = export(&app, &id, json!({"mode": "quick_summary", "selected_columns": []})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = export(&app, &id, json!({"mode": "sideways"})).await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn service_and_cli_exports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let zip_path = dir.path().join("batch.zip");
    std::fs::write(&zip_path, fixture_zip()).unwrap();
    let (_, app) = make_app(ServerConfig::default());
    let (_, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    let id = batch_id(&body);
    for mode in ["quick_summary", "detailed"] {
        let (_, catalog) = get(&app, &format!("/api/batches/{id}/catalog?mode={mode}")).await;
        let catalog: Value = serde_json::from_slice(&catalog).unwrap();
        let columns: Vec<Value> = catalog["groups"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|g| g["variables"].as_array().unwrap().clone())
            .map(|v| v["column_name"].clone())
            .collect();
        let (status, http_csv) = export(&app, &id, json!({"mode": mode, "selected_columns": columns})).await;
        assert_eq!(status, StatusCode::OK);
        let cli = Command::new(env!("CARGO_BIN_EXE_space"))
            .args(["export", "--mode", mode, zip_path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(cli.status.success());
        assert_eq!(http_csv, cli.stdout, "{mode}");
    }
}

#[tokio::test]
async fn oversized_uploads_are_refused() {
    let (_, app) = make_app(ServerConfig {
        max_upload_bytes: 4096,
        ..ServerConfig::default()
    });
    let big = vec![b'x'; 16 * 1024];
    let request = Request::post("/api/batches")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(multipart(&[("big.json", &big)]))
        .unwrap();
    let (status, _) = send(&app, request).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn deleted_and_expired_batches_are_gone() {
    let (_, app) = make_app(ServerConfig::default());
    let (_, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    let id = batch_id(&body);
    let delete = || Request::delete(format!("/api/batches/{id}")).body(Body::empty()).unwrap();
    assert_eq!(send(&app, delete()).await.0, StatusCode::NO_CONTENT);
    assert_eq!(send(&app, delete()).await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, &format!("/api/batches/{id}/catalog")).await.0, StatusCode::NOT_FOUND);

    let (state, app) = make_app(ServerConfig {
        ttl: Duration::from_millis(100),
        ..ServerConfig::default()
    });
    let (_, body) = upload(&app, &[("batch.zip", fixture_zip())]).await;
    let id = batch_id(&body);
    assert_eq!(get(&app, &format!("/api/batches/{id}/catalog")).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert_eq!(get(&app, &format!("/api/batches/{id}/catalog")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(state.purge_expired(), 1);
}

#[tokio::test]
async fn static_assets_are_served_at_the_root() {
    let (_, app) = make_app(ServerConfig::default());
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/batches"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>parser</p>").unwrap();
    let (_, app) = make_app(ServerConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..ServerConfig::default()
    });
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<p>parser</p>");
    assert_eq!(get(&app, "/api/batches/x/catalog").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrent_uploads_get_distinct_batches() {
    let (state, app) = make_app(ServerConfig::default());
    let log = write_session(&space_core::fixtures::week_one_log()).unwrap();
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            let log = log.clone();
            tokio::spawn(async move { upload(&app, &[("log.json", &log)]).await })
        })
        .collect();
    let mut ids = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::CREATED);
        ids.push(batch_id(&body));
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
    assert_eq!(state.batch_count(), 8);
}
