//! HTTP analysis service: `POST /analyze` and `GET /health`.

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use claudette::model::{analyze, ModelFile};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use tokio::net::TcpListener;

pub const DEFAULT_MAX_BODY: usize = 1 << 20;

struct AppState {
    model: ModelFile,
    errors: AtomicU64,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: &str) -> Response {
    json_response(status, format!("{}\n", serde_json::json!({ "error": message })))
}

/// Router over an immutable model shared by all requests.
pub fn router(model: ModelFile, max_body: usize) -> Router {
    let state = Arc::new(AppState { model, errors: AtomicU64::new(0) });
    Router::new()
        .route("/analyze", post(analyze_handler))
        .route("/health", get(health_handler))
        .layer(DefaultBodyLimit::max(max_body))
        .with_state(state)
}

async fn analyze_handler(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(ct) = headers.get(header::CONTENT_TYPE) {
        let is_text = ct.to_str().map(|v| v.trim().to_ascii_lowercase().starts_with("text/")).unwrap_or(false);
        if !is_text {
            return error(StatusCode::BAD_REQUEST, "content type must be text/plain");
        }
    }
    let Ok(text) = std::str::from_utf8(&body) else {
        return error(StatusCode::BAD_REQUEST, "body is not valid UTF-8");
    };
    if text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "empty body");
    }
    match analyze(&state.model, text, None) {
        Ok(result) => json_response(StatusCode::OK, result.to_json()),
        Err(e) => {
            let id = state.errors.fetch_add(1, Ordering::Relaxed) + 1;
            eprintln!("analyze error {id}: {e}");
            json_response(
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("{}\n", serde_json::json!({ "error": "internal error", "id": id })),
            )
        }
    }
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Response {
    let m = &state.model;
    let body = serde_json::json!({
        "status": "ok",
        "kind": m.kind,
        "format_version": m.format_version,
        "seed": m.metadata.seed,
        "corpus_fingerprint": m.metadata.corpus_fingerprint,
        "features": m.vocabulary.len(),
    });
    json_response(StatusCode::OK, format!("{body}\n"))
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: TcpListener, model: ModelFile, max_body: usize) -> std::io::Result<()> {
    axum::serve(listener, router(model, max_body))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
