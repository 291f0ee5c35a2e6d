//! HTTP front end for the session protocol. Responses are newline-delimited
//! JSON; each session is serialized behind its own lock.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evshell::engine::{CompiledKb, ExitPolicy, Response as Reply, Session};
use serde::Serialize;

use crate::commands::prepare;
use crate::protocol::{self, AnswerRequest, SessionMessage, VolunteerRequest};
use crate::{Cli, Failure};

struct AppState {
    compiled: Arc<CompiledKb>,
    policy: ExitPolicy,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

type Shared = Arc<AppState>;

fn ndjson(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    ndjson(
        status,
        protocol::line(&SessionMessage::Error {
            message: message.into(),
        }),
    )
}

fn session(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, Box<Response>> {
    state
        .sessions
        .lock()
        .expect("session table lock")
        .get(id)
        .cloned()
        .ok_or_else(|| Box::new(error(StatusCode::NOT_FOUND, format!("no session `{id}`"))))
}

#[derive(Serialize)]
#[serde(tag = "type", rename = "session")]
struct Created {
    id: String,
}

async fn create(State(state): State<Shared>, body: Option<Json<VolunteerRequest>>) -> Response {
    let request = body.map(|Json(b)| b).unwrap_or_default();
    let mut evidence = Vec::new();
    for item in request.evidence {
        match protocol::belief(item.confidence) {
            Ok(b) => evidence.push((item.attribute, item.value, b)),
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
        }
    }
    let s = match Session::start(Arc::clone(&state.compiled), state.policy.clone(), &evidence) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let id = state.next_id.fetch_add(1, Ordering::Relaxed).to_string();
    let mut body = protocol::line(&Created { id: id.clone() });
    body.push_str(&protocol::lines(&protocol::progress(&s, 0)));
    body.push_str(&protocol::line(&protocol::next(&s)));
    state
        .sessions
        .lock()
        .expect("session table lock")
        .insert(id, Arc::new(Mutex::new(s)));
    ndjson(StatusCode::CREATED, body)
}

async fn next(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Response {
    match session(&state, &id) {
        Ok(s) => ndjson(
            StatusCode::OK,
            protocol::line(&protocol::next(&s.lock().expect("session lock"))),
        ),
        Err(r) => *r,
    }
}

async fn beliefs(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Response {
    match session(&state, &id) {
        Ok(s) => ndjson(
            StatusCode::OK,
            protocol::line(&protocol::beliefs(&s.lock().expect("session lock"))),
        ),
        Err(r) => *r,
    }
}

async fn trace(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Response {
    #[derive(Serialize)]
    struct Entry<'a> {
        seq: usize,
        #[serde(flatten)]
        event: &'a evshell::engine::TraceEvent,
    }
    match session(&state, &id) {
        Ok(s) => {
            let s = s.lock().expect("session lock");
            let body: String = s
                .trace()
                .iter()
                .enumerate()
                .map(|(i, event)| protocol::line(&Entry { seq: i + 1, event }))
                .collect();
            ndjson(StatusCode::OK, body)
        }
        Err(r) => *r,
    }
}

/// Applies `op`, answering with the echo, the progress it caused and the
/// next message.
fn step(
    state: &AppState,
    id: &str,
    echo: Vec<SessionMessage>,
    op: impl FnOnce(&mut Session) -> Result<(), String>,
) -> Response {
    let s = match session(state, id) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let mut s = s.lock().expect("session lock");
    let from = s.trace().len();
    if let Err(e) = op(&mut s) {
        return error(StatusCode::UNPROCESSABLE_ENTITY, e);
    }
    let mut messages = echo;
    messages.extend(protocol::progress(&s, from));
    messages.push(protocol::next(&s));
    ndjson(StatusCode::OK, protocol::lines(&messages))
}

async fn answer(State(state): State<Shared>, UrlPath(id): UrlPath<String>, Json(req): Json<AnswerRequest>) -> Response {
    let confidence = match protocol::belief(req.confidence) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let (reply, response) = match (req.value.clone(), req.response.as_deref()) {
        (Some(v), None) => (Reply::Value(v), "value"),
        (None, Some("unknown")) => (Reply::Unknown, "unknown"),
        (None, Some("irrelevant")) => (Reply::Irrelevant, "irrelevant"),
        _ => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "give either a value or a response of `unknown` or `irrelevant`",
            )
        }
    };
    let echo = vec![SessionMessage::Answer {
        attribute: req.attribute.clone(),
        response: response.to_string(),
        value: req.value.clone(),
        confidence,
    }];
    step(&state, &id, echo, |s| {
        s.submit_answer(&req.attribute, reply, confidence)
            .map_err(|e| e.to_string())
    })
}

async fn volunteer(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<VolunteerRequest>,
) -> Response {
    let mut evidence = Vec::new();
    for item in req.evidence {
        match protocol::belief(item.confidence) {
            Ok(b) => evidence.push((item.attribute, item.value, b)),
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
        }
    }
    step(&state, &id, Vec::new(), |s| {
        s.volunteer(&evidence).map_err(|e| e.to_string())
    })
}

fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/volunteer", post(volunteer))
        .route("/sessions/{id}/beliefs", get(beliefs))
        .route("/sessions/{id}/trace", get(trace))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "no such endpoint") })
        .with_state(state)
}

pub fn run(cli: &Cli, path: &Path, listen: SocketAddr) -> Result<u8, Failure> {
    let (compiled, policy) = prepare(cli, path)?;
    let state = Arc::new(AppState {
        compiled,
        policy,
        sessions: Mutex::new(HashMap::new()),
        next_id: AtomicU64::new(1),
    });
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::environment(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| Failure::environment(format!("cannot listen on {listen}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::environment(e.to_string()))?;
        println!("listening on http://{addr}");
        use std::io::Write;
        std::io::stdout().flush().ok();
        axum::serve(listener, router(state))
            .await
            .map_err(|e| Failure::environment(e.to_string()))?;
        Ok(0)
    })
}
