//! HTTP and WebSocket front end for engine sessions.
//!
//! Each session runs on its own thread behind a mailbox, so requests to one
//! session are handled in arrival order while sessions run in parallel.

mod actor;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use caio_core::engine::{load_scenario, EngineError, Event, Input, Session, SessionSpec, StateView, StimulusSpec};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

pub use actor::Mailbox;

/// The frozen wire format of every endpoint.
pub const API_SCHEMA: &str = include_str!("../api/schema.json");

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    /// Directory that scenario and resource paths in requests are relative to.
    pub base_dir: PathBuf,
    /// Used by `POST /sessions` when the request names nothing.
    pub default_spec: SessionSpec,
    /// Built console assets served at `/`.
    pub static_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub id: String,
    pub self_agent: String,
    pub interlocutor: String,
    pub scenario: Option<String>,
    pub created_unix_ms: u64,
    /// Tick of the last event at creation: initial facts only.
    pub tick: u64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Scenario file whose agents, facts and resources the session uses.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub spec: Option<SessionSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRequest {
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accepted {
    pub accepted: bool,
    /// First tick the input produced, or the current tick if it produced none.
    pub tick: u64,
    pub last_tick: u64,
    pub events: usize,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
pub struct Since {
    #[serde(default)]
    pub since: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApiError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("{0}")]
    BadConfig(String),
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Engine(String),
}

impl ApiError {
    fn code(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::BadConfig(_) => (StatusCode::BAD_REQUEST, "bad_config"),
            ApiError::BadInput(_) => (StatusCode::BAD_REQUEST, "bad_input"),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ApiError::Engine(_) => (StatusCode::UNPROCESSABLE_ENTITY, "engine"),
        }
    }

    fn from_engine(id: &str, e: EngineError) -> ApiError {
        match e {
            EngineError::SessionClosed => ApiError::NotFound(id.to_string()),
            EngineError::BadConfig(m) => ApiError::BadConfig(m),
            EngineError::BadInput(m) => ApiError::BadInput(m),
            EngineError::NoPlan => ApiError::Conflict(e.to_string()),
            other => ApiError::Engine(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.code();
        (status, Json(serde_json::json!({"error": code, "message": self.to_string()}))).into_response()
    }
}

struct Entry {
    descriptor: SessionDescriptor,
    mailbox: Mailbox,
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    sessions: Arc<RwLock<HashMap<String, Entry>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> AppState {
        AppState { config: Arc::new(config), sessions: Arc::default() }
    }

    fn mailbox(&self, id: &str) -> Result<Mailbox, ApiError> {
        let sessions = self.sessions.read().expect("session table lock");
        sessions.get(id).map(|e| e.mailbox.clone()).ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    /// Start a session from a request body.
    pub fn create(&self, request: CreateSession) -> Result<SessionDescriptor, ApiError> {
        let (spec, base, scenario) = match (request.scenario, request.spec) {
            (Some(_), Some(_)) => return Err(ApiError::BadConfig("give either a scenario or a spec".into())),
            (Some(path), None) => {
                let full = self.config.base_dir.join(&path);
                let (s, base) = load_scenario(&full).map_err(|e| ApiError::BadConfig(e.to_string()))?;
                (s.session, base, Some(path.display().to_string()))
            }
            (None, Some(spec)) => (spec, self.config.base_dir.clone(), None),
            (None, None) => (self.config.default_spec.clone(), self.config.base_dir.clone(), None),
        };
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::create(id.clone(), &spec, &base).map_err(|e| ApiError::from_engine(&id, e))?;
        let descriptor = SessionDescriptor {
            id: id.clone(),
            self_agent: session.self_agent().to_string(),
            interlocutor: session.interlocutor().to_string(),
            scenario,
            created_unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
            tick: session.events().last().map_or(0, |e| e.tick),
        };
        let mailbox = actor::spawn(session);
        tracing::info!(session = %id, "session created");
        self.sessions
            .write()
            .expect("session table lock")
            .insert(id, Entry { descriptor: descriptor.clone(), mailbox });
        Ok(descriptor)
    }

    pub fn descriptors(&self) -> Vec<SessionDescriptor> {
        let sessions = self.sessions.read().expect("session table lock");
        let mut all: Vec<SessionDescriptor> = sessions.values().map(|e| e.descriptor.clone()).collect();
        all.sort_by(|a, b| a.created_unix_ms.cmp(&b.created_unix_ms).then(a.id.cmp(&b.id)));
        all
    }

    pub fn descriptor(&self, id: &str) -> Result<SessionDescriptor, ApiError> {
        let sessions = self.sessions.read().expect("session table lock");
        sessions.get(id).map(|e| e.descriptor.clone()).ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    pub async fn input(&self, id: &str, input: Input) -> Result<Vec<Event>, ApiError> {
        let gone = || ApiError::NotFound(id.to_string());
        self.mailbox(id)?.input(input).await.map_err(|_| gone())?.map_err(|e| ApiError::from_engine(id, e))
    }

    pub async fn state(&self, id: &str) -> Result<StateView, ApiError> {
        self.mailbox(id)?.state().await.map_err(|_| ApiError::NotFound(id.to_string()))
    }

    pub async fn log(&self, id: &str, since: u64) -> Result<Vec<Event>, ApiError> {
        self.mailbox(id)?.log(since).await.map_err(|_| ApiError::NotFound(id.to_string()))
    }

    pub async fn delete(&self, id: &str) -> Result<(), ApiError> {
        let entry = self.sessions.write().expect("session table lock").remove(id);
        let entry = entry.ok_or_else(|| ApiError::NotFound(id.to_string()))?;
        // the thread may already have stopped
        let _ = entry.mailbox.close().await;
        tracing::info!(session = %id, "session closed");
        Ok(())
    }
}

/// An empty body asks for the server's default session.
async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionDescriptor>), ApiError> {
    let request = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadInput(e.to_string()))?
    };
    Ok((StatusCode::CREATED, Json(app.create(request)?)))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(t)| t).map_err(|e| ApiError::BadInput(e.body_text()))
}

async fn list_sessions(State(app): State<AppState>) -> Json<Vec<SessionDescriptor>> {
    Json(app.descriptors())
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionDescriptor>, ApiError> {
    Ok(Json(app.descriptor(&id)?))
}

async fn delete_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    app.delete(&id).await?;
    Ok(StatusCode::NO_CONTENT)
}

fn accepted(events: &[Event], now: u64) -> Accepted {
    Accepted {
        accepted: true,
        tick: events.first().map_or(now, |e| e.tick),
        last_tick: events.last().map_or(now, |e| e.tick),
        events: events.len(),
    }
}

async fn post_utterance(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<UtteranceRequest>, JsonRejection>,
) -> Result<Json<Accepted>, ApiError> {
    let events = app.input(&id, Input::Utterance(body(payload)?.text)).await?;
    let now = if events.is_empty() { app.state(&id).await?.tick } else { 0 };
    Ok(Json(accepted(&events, now)))
}

async fn post_stimulus(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<StimulusSpec>, JsonRejection>,
) -> Result<Json<Accepted>, ApiError> {
    let events = app.input(&id, Input::Stimulus(body(payload)?)).await?;
    let now = if events.is_empty() { app.state(&id).await?.tick } else { 0 };
    Ok(Json(accepted(&events, now)))
}

async fn get_state(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<StateView>, ApiError> {
    Ok(Json(app.state(&id).await?))
}

async fn get_log(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<Since>,
) -> Result<Json<Vec<Event>>, ApiError> {
    Ok(Json(app.log(&id, q.since).await?))
}

async fn event_stream(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<Since>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let mailbox = app.mailbox(&id)?;
    Ok(ws.on_upgrade(move |socket| stream(socket, mailbox, q.since)))
}

/// Send every event after `since`, then follow the session live. A slow
/// client that falls behind the broadcast buffer catches up from the log.
async fn stream(mut socket: WebSocket, mailbox: Mailbox, since: u64) {
    let mut last = since;
    'subscribe: loop {
        let Ok((backlog, mut rx)) = mailbox.subscribe(last).await else { break };
        for e in backlog {
            if !send(&mut socket, &e, &mut last).await {
                return;
            }
        }
        loop {
            tokio::select! {
                received = rx.recv() => match received {
                    Ok(e) => {
                        if !send(&mut socket, &e, &mut last).await {
                            return;
                        }
                    }
                    Err(RecvError::Lagged(_)) => continue 'subscribe,
                    Err(RecvError::Closed) => break 'subscribe,
                },
                incoming = socket.recv() => match incoming {
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => {}
                },
            }
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

async fn send(socket: &mut WebSocket, e: &Event, last: &mut u64) -> bool {
    if e.tick <= *last {
        return true;
    }
    let text = serde_json::to_string(e).expect("events serialize");
    *last = e.tick;
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn schema() -> Response {
    ([(axum::http::header::CONTENT_TYPE, "application/json")], API_SCHEMA).into_response()
}

pub fn router(app: AppState) -> Router {
    let static_dir = app.config.static_dir.clone();
    let api = Router::new()
        .route("/api/schema", get(schema))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/utterances", post(post_utterance))
        .route("/sessions/{id}/stimuli", post(post_stimulus))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/log", get(get_log))
        .route("/sessions/{id}/events", get(event_stream))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serve on `addr` until the process stops.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(config))).await
}
