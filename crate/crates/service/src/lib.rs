//! HTTP/JSON front end over one immutable model bundle.
//!
//! Routes:
//!
//! - `POST /recommend` takes `{title, abstract, keywords, k, top_topics,
//!   terms_per_topic}` and answers with a recommendation.
//! - `GET /venues` answers `{"venues": [...]}`.
//! - `GET /health` answers `{"status": "ok", "model_version": ...}`.
//!
//! Failures answer `{"error": {"code", "message"}}` with a 4xx or 5xx status.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use venuerec::bundle::{ModelBundle, FORMAT_VERSION};
use venuerec::recommend::{recommend, Query, RecommendError, RecommendOptions};

#[derive(Debug, Clone, Deserialize)]
pub struct RecommendRequest {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_top_topics")]
    pub top_topics: usize,
    #[serde(default = "default_terms")]
    pub terms_per_topic: usize,
}

fn default_k() -> usize {
    RecommendOptions::default().k
}

fn default_top_topics() -> usize {
    RecommendOptions::default().top_topics
}

fn default_terms() -> usize {
    RecommendOptions::default().terms_per_topic
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
}

/// An error response.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.body }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", rejection.body_text())
    }
}

impl From<RecommendError> for ApiError {
    fn from(err: RecommendError) -> Self {
        match err {
            RecommendError::KOutOfRange { .. } | RecommendError::NoTerms => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_parameter", err.to_string())
            }
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

type Shared = Arc<ModelBundle>;

async fn health(State(bundle): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model_version": FORMAT_VERSION,
        "config_hash": bundle.config_hash,
        "corpus_fingerprint": bundle.corpus_fingerprint,
    }))
}

async fn venues(State(bundle): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "venues": bundle.venues() }))
}

async fn recommend_handler(
    State(bundle): State<Shared>,
    payload: Result<Json<RecommendRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = payload?;
    if req.title.trim().is_empty() && req.abstract_text.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty_query",
            "title and abstract are both empty",
        ));
    }
    let query = Query {
        title: req.title,
        abstract_text: req.abstract_text,
        keywords: req.keywords,
    };
    let options = RecommendOptions {
        k: req.k,
        top_topics: req.top_topics,
        terms_per_topic: req.terms_per_topic,
    };
    // Inference is CPU-bound; keep it off the async workers.
    let result = tokio::task::spawn_blocking(move || recommend(&query, &options, &bundle))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(result).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(bundle: Arc<ModelBundle>) -> Router {
    Router::new()
        .route("/recommend", post(recommend_handler))
        .route("/venues", get(venues))
        .route("/health", get(health))
        .fallback(not_found)
        .with_state(bundle)
}

/// Binds `addr:port` and serves until ctrl-c or SIGTERM.
pub async fn serve(bundle: ModelBundle, addr: &str, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((addr, port)).await?;
    serve_on(listener, bundle, shutdown_signal()).await
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    bundle: ModelBundle,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(Arc::new(bundle));
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
