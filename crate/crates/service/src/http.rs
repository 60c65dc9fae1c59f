//! `POST /build`, `GET /status/{job_id}` and `GET /download/{job_id}`.

use std::net::SocketAddr;

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tokio_util::io::ReaderStream;

use crate::config::ServiceConfig;
use crate::service::{BuildService, ServiceError};

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::ValidationFailed(_) => "ValidationFailed",
            ServiceError::UnknownJob(_) => "UnknownJob",
            ServiceError::NotReady { .. } => "NotReady",
            ServiceError::Registry(_) => "Registry",
            ServiceError::Io(_) => "Io",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            ServiceError::ValidationFailed(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownJob(_) => StatusCode::NOT_FOUND,
            ServiceError::NotReady { .. } => StatusCode::CONFLICT,
            ServiceError::Registry(_) | ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string(), "kind": self.kind() });
        if let ServiceError::NotReady { state, .. } = &self {
            body["state"] = json!(state);
        }
        (self.status(), Json(body)).into_response()
    }
}

pub fn router(service: BuildService) -> Router {
    Router::new()
        .route("/build", post(build))
        .route("/status/{job_id}", get(status))
        .route("/download/{job_id}", get(download))
        .with_state(service)
}

async fn build(State(svc): State<BuildService>, body: String) -> Result<Response, ServiceError> {
    let job_id = svc.submit(&body)?;
    Ok((StatusCode::CREATED, Json(json!({ "job_id": job_id }))).into_response())
}

async fn status(State(svc): State<BuildService>, Path(job_id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(svc.status(&job_id)?).into_response())
}

async fn download(State(svc): State<BuildService>, Path(job_id): Path<String>) -> Result<Response, ServiceError> {
    let (record, file) = svc.download(&job_id)?;
    let file = tokio::fs::File::from_std(file);
    let mut resp = Body::from_stream(ReaderStream::new(file)).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/octet-stream"));
    h.insert(header::CONTENT_LENGTH, HeaderValue::from(record.size_bytes));
    let text = |s: &str| HeaderValue::from_str(s).expect("ids and digests are header-safe");
    h.insert("x-image-id", text(&record.image_id));
    h.insert("x-image-format", text(record.format.as_str()));
    h.insert("x-payload-digest", text(&record.payload_digest.to_hex()));
    Ok(resp)
}

/// Binds `addr` and serves in the background; returns the bound address.
pub async fn spawn(service: BuildService, addr: &str) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(service);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("server error: {e}");
        }
    });
    Ok((local, handle))
}

/// Runs the service from its configuration until Ctrl-C.
pub async fn serve(cfg: &ServiceConfig) -> Result<(), String> {
    let service = BuildService::new(cfg).map_err(|e| e.to_string())?;
    let listener = TcpListener::bind(&cfg.listen).await.map_err(|e| format!("bind {}: {e}", cfg.listen))?;
    let local = listener.local_addr().map_err(|e| e.to_string())?;
    tracing::info!(%local, "listening");
    eprintln!("hpcready service listening on http://{local}");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
