//! Local HTTP service behind the browser parser.
//!
//! Batches live in memory only and expire after the configured TTL. Each
//! batch is immutable once ingested; it becomes visible only after its
//! ingestion has finished.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use space_core::export::{build_catalog, export_csv, ExportMode, ExportRequest};
use space_core::sessionlog::SessionLog;
use tower_http::services::ServeDir;

use crate::batch::{EntryStatus, Ingested};
use crate::error::AppError;

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub ttl: Duration,
    pub max_upload_bytes: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            ttl: Duration::from_secs(3600),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            static_dir: None,
        }
    }
}

struct Batch {
    sessions: Vec<SessionLog>,
    entries: Vec<EntryStatus>,
    created: Instant,
}

pub struct AppState {
    config: ServerConfig,
    batches: RwLock<HashMap<String, Arc<Batch>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            batches: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    /// Drop expired batches; returns how many were removed.
    pub fn purge_expired(&self) -> usize {
        let ttl = self.config.ttl;
        let mut batches = self.batches.write().expect("batch store lock");
        let before = batches.len();
        batches.retain(|_, b| b.created.elapsed() < ttl);
        before - batches.len()
    }

    pub fn batch_count(&self) -> usize {
        self.batches.read().expect("batch store lock").len()
    }

    fn get(&self, id: &str) -> Result<Arc<Batch>, ApiError> {
        let batches = self.batches.read().expect("batch store lock");
        batches
            .get(id)
            .filter(|b| b.created.elapsed() < self.config.ttl)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

/// An [`AppError`] with its HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: AppError,
}

impl ApiError {
    fn new(status: StatusCode, error: AppError) -> Self {
        ApiError { status, error }
    }

    fn bad_request(error: AppError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, error)
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, AppError::new("unknown_batch", format!("no batch with id `{id}`")))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.error }))).into_response()
    }
}

impl From<space_core::export::ExportError> for ApiError {
    fn from(e: space_core::export::ExportError) -> Self {
        use space_core::export::ExportError as E;
        let status = match e {
            E::Metrics(_) | E::Questionnaire(_) | E::Csv(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.into())
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, AppError::new("internal", e.to_string()))
}

#[derive(Debug, Serialize)]
struct UploadResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_id: Option<String>,
    n_ok: usize,
    n_error: usize,
    entries: Vec<EntryStatus>,
}

#[derive(Debug, Deserialize)]
struct CatalogQuery {
    mode: Option<String>,
}

async fn upload(
    State(state): State<Arc<AppState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Response, ApiError> {
    let mut multipart =
        multipart.map_err(|e| ApiError::new(e.status(), AppError::new("bad_upload", e.body_text())))?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::new(e.status(), AppError::new("bad_upload", e.body_text())))?
    {
        let name = field
            .file_name()
            .or(field.name())
            .map_or_else(|| format!("upload-{}", files.len() + 1), String::from);
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::new(e.status(), AppError::new("bad_upload", e.body_text())))?;
        files.push((name, bytes.to_vec()));
    }
    if files.is_empty() {
        return Err(ApiError::bad_request(AppError::new("bad_upload", "no files in the upload")));
    }
    let ingested = tokio::task::spawn_blocking(move || {
        let mut batch = Ingested::default();
        for (name, bytes) in &files {
            batch.add(name, bytes);
        }
        batch
    })
    .await
    .map_err(internal)?;
    let n_error = ingested.n_errors();
    if ingested.sessions.is_empty() {
        let body = UploadResponse {
            batch_id: None,
            n_ok: 0,
            n_error,
            entries: ingested.entries,
        };
        return Ok((StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response());
    }
    state.purge_expired();
    let id = format!("b{:06}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let body = UploadResponse {
        batch_id: Some(id.clone()),
        n_ok: ingested.sessions.len(),
        n_error,
        entries: ingested.entries.clone(),
    };
    let batch = Batch {
        sessions: ingested.sessions,
        entries: ingested.entries,
        created: Instant::now(),
    };
    state.batches.write().expect("batch store lock").insert(id, Arc::new(batch));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let batch = state.get(&id)?;
    let body = UploadResponse {
        batch_id: Some(id),
        n_ok: batch.sessions.len(),
        n_error: batch.entries.iter().filter(|e| e.status != "ok").count(),
        entries: batch.entries.clone(),
    };
    Ok(Json(body).into_response())
}

async fn catalog(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<CatalogQuery>,
) -> Result<Response, ApiError> {
    let batch = state.get(&id)?;
    let mode: ExportMode = query.mode.as_deref().unwrap_or("quick_summary").parse()?;
    let catalog = build_catalog(&batch.sessions, mode)?;
    Ok(Json(catalog).into_response())
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    request: Result<Json<ExportRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let batch = state.get(&id)?;
    let Json(request) = request.map_err(|e| ApiError::new(e.status(), AppError::new("bad_request", e.body_text())))?;
    let mode = request.mode;
    let csv = tokio::task::spawn_blocking(move || export_csv(&batch.sessions, &request))
        .await
        .map_err(internal)??;
    let disposition = format!("attachment; filename=\"space_{mode}.csv\"");
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        csv,
    )
        .into_response())
}

async fn remove(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match state.batches.write().expect("batch store lock").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

const INDEX: &str = r#"<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>SPACE Data Parser</title></head>
<body>
<h1>SPACE Data Parser</h1>
<p>No front-end assets configured. Start the service with <code>--static-dir</code> to serve one.</p>
<ul>
<li><code>POST /api/batches</code> multipart upload of logs or zip archives</li>
<li><code>GET /api/batches/{id}/catalog?mode=quick_summary|detailed</code></li>
<li><code>POST /api/batches/{id}/export</code> with <code>{"mode": ..., "selected_columns": [...]}</code></li>
<li><code>DELETE /api/batches/{id}</code></li>
</ul>
</body>
</html>
"#;

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/batches", post(upload).layer(DefaultBodyLimit::max(limit)))
        .route("/api/batches/{id}", get(status).delete(remove))
        .route("/api/batches/{id}/catalog", get(catalog))
        .route("/api/batches/{id}/export", post(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

/// Bind `addr` and serve until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> Result<(), AppError> {
    let sweep = config.ttl.clamp(Duration::from_secs(1), Duration::from_secs(60));
    let state = AppState::new(config);
    let sweeper = Arc::clone(&state);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(sweep);
        loop {
            tick.tick().await;
            sweeper.purge_expired();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::new("bind", format!("{addr}: {e}")))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
