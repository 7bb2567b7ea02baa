//! HTTP adapter over the engine and catalog.
//!
//! Bodies are the library's own serializations: a query answers with
//! `ResultTable::to_json`, failures with `{"error": Diagnostic}`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use signal_core::{Diagnostic, Engine, Error};

use crate::datadir::{self, SourceFormat};

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

pub struct AppState {
    pub engine: Engine,
    /// Where ingested logs are persisted; `None` keeps them in memory only.
    pub data_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
}

impl AppState {
    pub fn new(engine: Engine) -> AppState {
        AppState { engine, data_dir: None, max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.max_upload_bytes;
    Router::new()
        .route("/signal/queries", post(run_query))
        .route("/logs", post(ingest).layer(DefaultBodyLimit::max(limit)).get(list_logs))
        .route("/logs/{log_id}", delete(delete_log))
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct QueryRequest {
    query: String,
    log_id: Option<String>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: Diagnostic,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Ingested {
    log_id: String,
    cases: usize,
    events: usize,
}

fn error_response(status: StatusCode, diagnostic: Diagnostic) -> Response {
    (status, Json(ErrorBody { error: diagnostic })).into_response()
}

fn request_error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    error_response(status, Diagnostic { code: code.into(), message: message.into(), span: None })
}

/// 404 for a missing log, 400 for every other user error.
fn engine_error(e: &Error) -> Response {
    let status = if e.code() == "UnknownLog" { StatusCode::NOT_FOUND } else { StatusCode::BAD_REQUEST };
    error_response(status, e.diagnostic())
}

fn internal(message: impl Into<String>) -> Response {
    request_error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
}

async fn run_query(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return request_error(StatusCode::BAD_REQUEST, "InvalidRequest", e.to_string()),
    };
    let engine = state.engine.clone();
    let result = tokio::task::spawn_blocking(move || engine.query(&req.query, req.log_id.as_deref())).await;
    match result {
        Ok(Ok(table)) => ([(header::CONTENT_TYPE, "application/json")], table.to_json()).into_response(),
        Ok(Err(e)) => engine_error(&e),
        Err(e) => internal(e.to_string()),
    }
}

async fn list_logs(State(state): State<Arc<AppState>>) -> Response {
    Json(state.engine.catalog().list()).into_response()
}

async fn delete_log(State(state): State<Arc<AppState>>, UrlPath(log_id): UrlPath<String>) -> Response {
    if let Err(e) = state.engine.catalog().remove(&log_id) {
        return engine_error(&e.into());
    }
    if let Some(dir) = &state.data_dir {
        if let Err(e) = datadir::forget(dir, &log_id) {
            return internal(format!("{e:#}"));
        }
    }
    StatusCode::NO_CONTENT.into_response()
}

#[derive(Default)]
struct Upload {
    file: Option<(Option<String>, Bytes)>,
    config: Option<String>,
    log_id: Option<String>,
    format: Option<String>,
}

#[allow(clippy::result_large_err)]
async fn read_upload(mut multipart: Multipart, limit: usize) -> Result<Upload, Response> {
    let mut upload = Upload::default();
    let mut total = 0usize;
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => return Err(request_error(e.status(), "InvalidUpload", e.body_text())),
        };
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field
            .bytes()
            .await
            .map_err(|e| request_error(e.status(), "InvalidUpload", e.body_text()))?;
        total += bytes.len();
        if total > limit {
            return Err(request_error(
                StatusCode::PAYLOAD_TOO_LARGE,
                "PayloadTooLarge",
                format!("upload exceeds {limit} bytes"),
            ));
        }
        let text = || {
            String::from_utf8(bytes.to_vec()).map_err(|_| {
                request_error(StatusCode::BAD_REQUEST, "InvalidUpload", format!("field '{name}' is not UTF-8"))
            })
        };
        match name.as_str() {
            "file" => upload.file = Some((file_name, bytes.clone())),
            "config" => upload.config = Some(text()?),
            "logId" => upload.log_id = Some(text()?.trim().to_string()),
            "format" => upload.format = Some(text()?.trim().to_string()),
            _ => {}
        }
    }
    Ok(upload)
}

#[allow(clippy::result_large_err)]
async fn ingest(State(state): State<Arc<AppState>>, multipart: Multipart) -> Response {
    let upload = match read_upload(multipart, state.max_upload_bytes).await {
        Ok(u) => u,
        Err(r) => return r,
    };
    let bad = |code: &str, msg: String| request_error(StatusCode::BAD_REQUEST, code, msg);
    let Some((file_name, bytes)) = upload.file else {
        return bad("InvalidUpload", "missing 'file' field".into());
    };
    let file_path = file_name.as_deref().map(Path::new);
    let format = match (&upload.format, file_path) {
        (Some(f), _) => SourceFormat::from_extension(f),
        (None, Some(p)) => SourceFormat::from_path(p),
        (None, None) => None,
    };
    let Some(format) = format else {
        return bad("InvalidUpload", "cannot tell the file format; send a .csv, .tsv or .xes file name or a 'format' field".into());
    };
    let log_id = upload
        .log_id
        .filter(|id| !id.is_empty())
        .or_else(|| file_path.and_then(|p| p.file_stem()).and_then(|s| s.to_str()).map(str::to_string));
    let Some(log_id) = log_id else {
        return bad("InvalidUpload", "missing 'logId' field".into());
    };
    if let Err(e) = datadir::check_log_id(&log_id) {
        return bad("InvalidLogId", e.to_string());
    }
    let catalog = state.engine.catalog().clone();
    if catalog.contains(&log_id) {
        return engine_error(&signal_core::error::StoreError::DuplicateLogId(log_id).into());
    }

    let config = upload.config.filter(|c| !c.trim().is_empty());
    let worker_state = state.clone();
    let result = tokio::task::spawn_blocking(move || -> Result<Ingested, Response> {
        let log = datadir::load_bytes(&bytes, format, config.as_deref(), &log_id)
            .map_err(|e| engine_error(&e.into()))?;
        let ingested = Ingested { log_id: log_id.clone(), cases: log.case_count(), events: log.event_count() };
        catalog.register(log).map_err(|e| engine_error(&e.into()))?;
        if let Some(dir) = &worker_state.data_dir {
            if let Err(e) = datadir::persist(dir, &log_id, format, &bytes, config.as_deref()) {
                let _ = catalog.remove(&log_id);
                return Err(internal(format!("{e:#}")));
            }
        }
        Ok(ingested)
    })
    .await;
    match result {
        Ok(Ok(ingested)) => {
            tracing::info!(log_id = %ingested.log_id, cases = ingested.cases, events = ingested.events, "ingested log");
            (StatusCode::CREATED, Json(ingested)).into_response()
        }
        Ok(Err(response)) => response,
        Err(e) => internal(e.to_string()),
    }
}
