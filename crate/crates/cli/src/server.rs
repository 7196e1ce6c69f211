//! HTTP session service. Every body is JSON. Sessions live in memory and can
//! be written to and read back from the session directory.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use relworld::dialog::Question;
use relworld::session::{Session, TranscriptLine};
use relworld::snapshot::GraphSnapshot;
use relworld::world::{Possible, WorldError};
use relworld::{EntityId, RelationAtom};
use serde::{Deserialize, Serialize};

use crate::config::Resources;
use crate::repl::{new_id, resolve_entity};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Shared>,
}

struct Shared {
    res: Resources,
    // The registry lock is held only to look up or insert; each session has
    // its own lock so distinct sessions proceed concurrently.
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(res: Resources) -> AppState {
        AppState {
            inner: Arc::new(Shared {
                res,
                sessions: Mutex::new(HashMap::new()),
            }),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.inner
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/session", post(create))
        .route("/api/session/{id}", get(overview))
        .route("/api/session/{id}/say", post(say))
        .route("/api/session/{id}/graph", get(graph))
        .route("/api/session/{id}/relations", get(relations))
        .route("/api/session/{id}/save", post(save))
        .route("/api/session/{id}/load", post(load))
        .with_state(state)
}

pub async fn serve(res: Resources, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(res)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(serde_json::json!({ "error": msg }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError::BadRequest(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> ApiError {
        ApiError::BadRequest(r.body_text())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub graph_version: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SayRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub id: u64,
    pub text: String,
    /// `choose-relation`, `yes-no-self`, `ask-gender`, ...
    pub kind: String,
    pub options: Vec<String>,
}

impl From<&Question> for QuestionView {
    fn from(q: &Question) -> QuestionView {
        QuestionView {
            id: q.id,
            text: q.text.clone(),
            kind: q.kind.name().to_string(),
            options: q.options.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SayResponse {
    pub replies: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionView>,
    pub graph_version: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Overview {
    pub session_id: String,
    pub created: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionView>,
    pub transcript: Vec<TranscriptLine>,
    pub graph_version: u64,
}

#[derive(Debug, Deserialize)]
pub struct PairQuery {
    pub a: String,
    pub b: String,
}

/// Either `relations` lists the atoms of "a is R of b", or `disjoint` is set
/// because no connection between the two is known.
#[derive(Debug, Serialize, Deserialize)]
pub struct RelationsResponse {
    pub a: EntityId,
    pub b: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<Vec<RelationAtom>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub disjoint: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Saved {
    pub path: String,
    pub graph_version: u64,
}

async fn create(State(app): State<AppState>) -> Result<Json<Created>, ApiError> {
    let res = &app.inner.res;
    let id = new_id();
    let session = Session::new(id.clone(), res.table.clone(), res.session.clone())
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let graph_version = session.world().version();
    app.inner
        .sessions
        .lock()
        .unwrap()
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(Created {
        session_id: id,
        graph_version,
    }))
}

async fn overview(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Overview>, ApiError> {
    let handle = app.session(&id)?;
    let s = handle.lock().unwrap();
    Ok(Json(Overview {
        session_id: s.id.clone(),
        created: s.created,
        question: s.pending().map(QuestionView::from),
        transcript: s.transcript().to_vec(),
        graph_version: s.world().version(),
    }))
}

async fn say(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SayRequest>, JsonRejection>,
) -> Result<Json<SayResponse>, ApiError> {
    let handle = app.session(&id)?;
    let Json(req) = body?;
    let res = &app.inner.res;
    let mut s = handle.lock().unwrap();
    let reply = s.say(&req.text, &res.lex, &res.store);
    Ok(Json(SayResponse {
        replies: reply.replies,
        question: reply.question.as_ref().map(QuestionView::from),
        graph_version: s.world().version(),
    }))
}

async fn graph(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<GraphSnapshot>, ApiError> {
    let handle = app.session(&id)?;
    let s = handle.lock().unwrap();
    Ok(Json(GraphSnapshot::of(s.world())))
}

async fn relations(
    State(app): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<PairQuery>, QueryRejection>,
) -> Result<Json<RelationsResponse>, ApiError> {
    let handle = app.session(&id)?;
    let Query(q) = query?;
    let s = handle.lock().unwrap();
    let w = s.world();
    let a = resolve_entity(w, &q.a).map_err(ApiError::NotFound)?;
    let b = resolve_entity(w, &q.b).map_err(ApiError::NotFound)?;
    let answer = w.possible_relations(a, b).map_err(|e| match e {
        WorldError::UnknownEntity(_) => ApiError::NotFound(e.to_string()),
        e => ApiError::Internal(e.to_string()),
    })?;
    Ok(Json(match answer {
        Possible::Relations(set) => RelationsResponse {
            a,
            b,
            relations: Some(set.atoms()),
            disjoint: false,
        },
        Possible::Disjoint => RelationsResponse {
            a,
            b,
            relations: None,
            disjoint: true,
        },
    }))
}

/// Session ids become file names, so only plain characters are accepted.
fn file_name(id: &str) -> Result<String, ApiError> {
    let plain = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if plain {
        Ok(format!("{id}.json"))
    } else {
        Err(ApiError::BadRequest(format!("invalid session id {id:?}")))
    }
}

async fn save(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Saved>, ApiError> {
    let handle = app.session(&id)?;
    let path = app.inner.res.session_path(&file_name(&id)?);
    let (json, graph_version) = {
        let s = handle.lock().unwrap();
        (s.save_json(), s.world().version())
    };
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(&app.inner.res.session_dir)?;
        std::fs::write(&path, json)
    };
    write().map_err(|e| ApiError::Internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(Json(Saved {
        path: path.display().to_string(),
        graph_version,
    }))
}

/// Replace (or create) the in-memory session from its saved file.
async fn load(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<GraphSnapshot>, ApiError> {
    let res = &app.inner.res;
    let path = res.session_path(&file_name(&id)?);
    let json = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ApiError::NotFound(format!("no saved session {id}")),
        _ => ApiError::Internal(format!("cannot read {}: {e}", path.display())),
    })?;
    let mut session =
        Session::load_json(res.table.clone(), &json).map_err(|e| ApiError::Internal(e.to_string()))?;
    session.id = id.clone();
    let snapshot = GraphSnapshot::of(session.world());
    app.inner
        .sessions
        .lock()
        .unwrap()
        .insert(id, Arc::new(Mutex::new(session)));
    Ok(Json(snapshot))
}
