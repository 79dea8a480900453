//! HTTP/JSON front end of the chat service.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ideation_core::chat::{
    valid_session_id, ChatError, MessageOutcome, RiskReport, SessionManager, SessionStart,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

/// Environment variable holding the bearer token for every `/v1` route.
pub const TOKEN_ENV: &str = "IDEATION_API_TOKEN";

#[derive(Clone)]
struct AppState {
    manager: Arc<SessionManager>,
    token: Arc<str>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<ChatError> for ApiError {
    fn from(e: ChatError) -> Self {
        let (status, code) = match &e {
            ChatError::SessionNotFound(_) => (StatusCode::NOT_FOUND, "session_not_found"),
            ChatError::SessionClosed(_) => (StatusCode::CONFLICT, "session_closed"),
            ChatError::ModelNotLoaded => (StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded"),
            ChatError::InvalidMessage(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_message"),
            ChatError::BankInvalid(_)
            | ChatError::PolicyInvalid(_)
            | ChatError::Detector(_)
            | ChatError::Log(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code.to_owned(),
                message: self.message,
            },
        };
        let mut resp = (self.status, Json(body)).into_response();
        if self.status == StatusCode::UNAUTHORIZED {
            resp.headers_mut()
                .insert(header::WWW_AUTHENTICATE, HeaderValue::from_static("Bearer"));
        }
        resp
    }
}

fn same_bytes(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let presented = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match presented {
        Some(t) if same_bytes(t.trim().as_bytes(), state.token.as_bytes()) => next.run(req).await,
        _ => ApiError::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or invalid bearer token",
        )
        .into_response(),
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ChatError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn checked_id(id: String) -> Result<String, ApiError> {
    if valid_session_id(&id) {
        Ok(id)
    } else {
        Err(ChatError::SessionNotFound(id).into())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MessageRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_loaded: bool,
    pub model_checksum: Option<String>,
}

async fn create_session(State(state): State<AppState>) -> Result<(StatusCode, Json<SessionStart>), ApiError> {
    let manager = state.manager.clone();
    let start = blocking(move || manager.create_session()).await?;
    Ok((StatusCode::CREATED, Json(start)))
}

async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<MessageRequest>, JsonRejection>,
) -> Result<Json<MessageOutcome>, ApiError> {
    let id = checked_id(id)?;
    let Json(body) = body?;
    let manager = state.manager.clone();
    Ok(Json(
        blocking(move || manager.post_message(&id, &body.text)).await?,
    ))
}

async fn get_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<RiskReport>, ApiError> {
    let id = checked_id(id)?;
    let manager = state.manager.clone();
    Ok(Json(blocking(move || manager.report(&id)).await?))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".to_owned(),
        model_loaded: state.manager.model_loaded(),
        model_checksum: state.manager.model_id(),
    })
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// The `/v1` API. Every route requires `Authorization: Bearer <token>`.
pub fn router(manager: Arc<SessionManager>, token: &str) -> Router {
    let state = AppState {
        manager,
        token: Arc::from(token),
    };
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/messages", post(post_message))
        .route("/v1/sessions/{id}/report", get(get_report))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

/// Allows browser clients served from `origin` to call the API.
pub fn with_cors(router: Router, origin: HeaderValue) -> Router {
    router.layer(
        CorsLayer::new()
            .allow_origin(origin)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]),
    )
}
