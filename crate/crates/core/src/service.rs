//! HTTP retrieval service.
//!
//! | route              | body                          |
//! |--------------------|-------------------------------|
//! | `POST /v1/retrieve` | `QueryRequest` → `QueryResponse` |
//! | `GET /v1/health`   | status and schema version     |
//! | `GET /v1/stats`    | catalog and index sizes       |
//!
//! Malformed requests get 400, a collapsed scope gets 422. Indexes are loaded
//! once and shared read-only between requests.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower::limit::GlobalConcurrencyLimitLayer;

use crate::api::{respond, QueryError, QueryRequest};
use crate::artifacts::{LoadedIndex, FORMAT_VERSION};

pub const DEFAULT_MAX_CONCURRENCY: usize = 64;

#[derive(Debug)]
pub struct ServiceState {
    pub index: LoadedIndex,
}

fn error_response(status: StatusCode, kind: &str, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": kind, "message": message.into() }))).into_response()
}

async fn retrieve(State(state): State<Arc<ServiceState>>, body: Bytes) -> Response {
    let request: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "malformed_request", e.to_string()),
    };
    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        let index = &worker.index;
        respond(&index.indexes, &index.manifest.config, &index.manifest.schema_version, &request)
    })
    .await;
    match result {
        Ok(Ok(response)) => Json(response).into_response(),
        Ok(Err(e)) => {
            let status = match &e {
                QueryError::ScopeCollapsed { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                e if e.is_client_error() => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            error_response(status, e.kind(), e.to_string())
        }
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    }
}

async fn health(State(state): State<Arc<ServiceState>>) -> Response {
    Json(json!({ "status": "ok", "schema_version": state.index.manifest.schema_version })).into_response()
}

async fn stats(State(state): State<Arc<ServiceState>>) -> Response {
    let idx = &state.index.indexes;
    let cs = idx.catalog.stats();
    Json(json!({
        "schema_version": state.index.manifest.schema_version,
        "format_version": FORMAT_VERSION,
        "catalog": {
            "table_count": cs.table_count,
            "column_count": cs.column_count,
            "median_fk_per_table": cs.median_fk_per_table,
        },
        "chunk_count": idx.chunks.len(),
        "triplet_count": idx.graph.len(),
    }))
    .into_response()
}

pub fn router(index: LoadedIndex, max_concurrency: usize) -> Router {
    let state = Arc::new(ServiceState { index });
    Router::new()
        .route("/v1/retrieve", post(retrieve))
        .route("/v1/health", get(health))
        .route("/v1/stats", get(stats))
        .layer(GlobalConcurrencyLimitLayer::new(max_concurrency.max(1)))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    router: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router).with_graceful_shutdown(shutdown).await
}
