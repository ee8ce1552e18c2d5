//! HTTP facade over the dialogue engine.
//!
//! | method | path                           | body            |
//! |--------|--------------------------------|-----------------|
//! | POST   | `/api/sessions`                | none            |
//! | POST   | `/api/sessions/{id}/messages`  | `{"text": ...}` |
//! | GET    | `/api/sessions/{id}`           | none            |
//! | POST   | `/api/kb/validate`             | KB document     |
//! | GET    | `/api/health`                  | none            |

pub mod store;

use std::sync::Arc;
use std::time::Duration;

use argudialog_core::engine::{DialogueEngine, DialogueEvent, EngineError, Phase};
use argudialog_core::id::ArgId;
use argudialog_core::kb::{ParseMode, ValidationReport, check_kb_bytes};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode, header};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use store::{
    DEFAULT_IDLE_TTL, InMemorySessionStore, SessionRecord, SessionStore, TranscriptEntry,
};

pub const DEFAULT_MESSAGE_CAP: usize = 500;

/// The knowledge base the server booted with.
#[derive(Debug, Clone)]
pub enum LoadedKb {
    Ready(Arc<DialogueEngine>),
    /// Boot-time validation failed; session endpoints answer 503.
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub message_cap: usize,
    pub allow_origin: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            message_cap: DEFAULT_MESSAGE_CAP,
            allow_origin: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    kb: LoadedKb,
    store: Arc<dyn SessionStore>,
    config: ServerConfig,
}

impl AppState {
    pub fn new(kb: LoadedKb, store: Arc<dyn SessionStore>, config: ServerConfig) -> Self {
        Self { kb, store, config }
    }

    pub fn store(&self) -> &Arc<dyn SessionStore> {
        &self.store
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

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

    fn not_found() -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "SESSION_NOT_FOUND",
            "unknown or expired session",
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub greeting: String,
}

#[derive(Debug, Deserialize)]
struct MessageRequest {
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MessageResponse {
    pub events: Vec<DialogueEvent>,
    pub phase: Phase,
    pub last_reply: Option<ArgId>,
}

#[derive(Debug, Serialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub phase: Phase,
    pub activated: Vec<ArgId>,
    pub last_reply: Option<ArgId>,
    pub candidate: Option<ArgId>,
    pub pending_prompts: Vec<ArgId>,
    pub message_count: usize,
    pub created_at: u64,
    pub last_active: u64,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
}

fn engine(state: &AppState) -> Result<&Arc<DialogueEngine>, ApiError> {
    match &state.kb {
        LoadedKb::Ready(engine) => Ok(engine),
        LoadedKb::Invalid(why) => Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "KB_INVALID",
            format!("the knowledge base failed validation at boot: {why}"),
        )),
    }
}

async fn create_session(State(state): State<AppState>) -> Result<Response, ApiError> {
    let engine = engine(&state)?;
    let session_id = store::new_session_id();
    state.store.insert(SessionRecord::new(
        session_id.clone(),
        engine.start_session(),
    ));
    tracing::debug!(session = %session_id, "session created");
    let body = CreatedSession {
        session_id,
        greeting: engine.greeting().to_owned(),
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<MessageResponse>, ApiError> {
    engine(&state)?;
    let request: MessageRequest = serde_json::from_slice(&body).map_err(|e| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "BAD_REQUEST",
            format!("invalid message body: {e}"),
        )
    })?;
    if request.text.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "EMPTY_TEXT",
            "message text must not be empty",
        ));
    }
    let shared = state.store.get(&id).ok_or_else(ApiError::not_found)?;
    let mut record = shared.lock().await;
    if record.session.phase() == Phase::Terminated {
        return Err(terminated());
    }
    if record.message_count >= state.config.message_cap {
        return Err(ApiError::new(
            StatusCode::TOO_MANY_REQUESTS,
            "MESSAGE_CAP",
            format!(
                "this session accepts at most {} messages",
                state.config.message_cap
            ),
        ));
    }
    let events = record
        .session
        .handle_utterance(&request.text)
        .map_err(|e| match e {
            EngineError::SessionTerminated => terminated(),
            other => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "ENGINE_ERROR",
                other.to_string(),
            ),
        })?;
    record.message_count += 1;
    record
        .transcript
        .push(TranscriptEntry::User { text: request.text });
    record.transcript.extend(
        events
            .iter()
            .cloned()
            .map(|event| TranscriptEntry::System { event }),
    );
    Ok(Json(MessageResponse {
        events,
        phase: record.session.phase(),
        last_reply: record.session.state().last_reply.clone(),
    }))
}

fn terminated() -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "SESSION_TERMINATED",
        "the session has ended",
    )
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, ApiError> {
    let shared = state.store.get(&id).ok_or_else(ApiError::not_found)?;
    let record = shared.lock().await;
    let s = record.session.state();
    let last_active = state
        .store
        .last_active(&id)
        .map(store::unix_millis)
        .unwrap_or_default();
    Ok(Json(SessionSnapshot {
        session_id: record.session_id.clone(),
        phase: s.phase,
        activated: s.activated.iter().cloned().collect(),
        last_reply: s.last_reply.clone(),
        candidate: s.candidate.clone(),
        pending_prompts: s.pending_prompts.iter().cloned().collect(),
        message_count: record.message_count,
        created_at: store::unix_millis(record.created_at),
        last_active,
        transcript: record.transcript.clone(),
    }))
}

async fn validate_kb_body(body: Bytes) -> (StatusCode, Json<ValidationReport>) {
    let (file, report) = check_kb_bytes(&body, ParseMode::Strict);
    let status = if file.is_some() {
        StatusCode::OK
    } else {
        StatusCode::BAD_REQUEST
    };
    (status, Json(report))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: match state.kb {
            LoadedKb::Ready(_) => "ok",
            LoadedKb::Invalid(_) => "kb_invalid",
        },
    })
}

fn cors(origin: &str) -> Option<CorsLayer> {
    let allow = if origin == "*" {
        AllowOrigin::any()
    } else {
        AllowOrigin::exact(HeaderValue::from_str(origin).ok()?)
    };
    Some(
        CorsLayer::new()
            .allow_origin(allow)
            .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
            .allow_headers([header::CONTENT_TYPE]),
    )
}

pub fn router(state: AppState) -> Router {
    let allow_origin = state.config.allow_origin.clone();
    let mut app = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/kb/validate", post(validate_kb_body))
        .route("/api/health", get(health))
        .with_state(state);
    if let Some(origin) = allow_origin {
        match cors(&origin) {
            Some(layer) => app = app.layer(layer),
            None => tracing::warn!(%origin, "ignoring unparseable --allow-origin value"),
        }
    }
    app
}

/// Periodically drops idle sessions until the runtime shuts down.
pub fn spawn_sweeper(store: Arc<dyn SessionStore>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let evicted = store.evict_expired();
            if evicted > 0 {
                tracing::debug!(evicted, "expired sessions evicted");
            }
        }
    })
}

/// Serves `router(state)` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let sweeper = spawn_sweeper(Arc::clone(&state.store), Duration::from_secs(60));
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    sweeper.abort();
    result
}
