//! HTTP front end for trial conduct.
//!
//! Sessions live in memory behind one lock each; with a data directory
//! every accepted log entry is appended to `<dir>/<id>.jsonl` and the
//! sessions are replayed from those files at start-up.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::RwLock;
use tite_stein_core::table::generate_decision_table;
use tite_stein_core::{compute_boundaries, DesignParams};

use crate::conduct::{ConductError, EventBatch, LogEntry, Session, WhatIf};
use crate::files::{config_hash, from_json_str};
use crate::report::{table_csv, table_text, TableReport};
use crate::DEFAULT_SEED;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Conduct(#[from] ConductError),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        let (code, body) = match self {
            ServiceError::Conduct(ConductError::NotFound(_)) => (StatusCode::NOT_FOUND, json!({ "error": message })),
            ServiceError::Conduct(ConductError::Invalid { path, .. }) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": message, "path": path }))
            }
            ServiceError::Conduct(ConductError::Conflict(_)) => (StatusCode::CONFLICT, json!({ "error": message })),
            ServiceError::Conduct(ConductError::Pending(ids)) => {
                (StatusCode::CONFLICT, json!({ "error": message, "pending": ids }))
            }
            ServiceError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": message })),
        };
        (code, Json(body)).into_response()
    }
}

type Shared = Arc<AppState>;
type Reply<T> = Result<T, ServiceError>;

fn parse<T: serde::de::DeserializeOwned>(body: &str) -> Result<T, ConductError> {
    let body = if body.trim().is_empty() { "{}" } else { body };
    from_json_str(body).map_err(|(path, message)| ConductError::Invalid { path, message })
}

impl AppState {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `dir`, replaying every stored session.
    pub fn open(dir: &Path) -> Result<Self, Box<dyn std::error::Error>> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                let log = read_log(&path)?;
                let s = Session::replay(&log).map_err(|e| format!("{}: {e}", path.display()))?;
                sessions.insert(s.id.clone(), Arc::new(RwLock::new(s)));
            }
        }
        Ok(AppState {
            sessions: RwLock::new(sessions),
            dir: Some(dir.to_path_buf()),
        })
    }

    async fn session(&self, id: &str) -> Result<Arc<RwLock<Session>>, ConductError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ConductError::NotFound(id.to_string()))
    }

    fn append(&self, id: &str, entries: &[LogEntry]) -> std::io::Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(format!("{id}.jsonl")))?;
        let mut buf = Vec::new();
        for e in entries {
            serde_json::to_writer(&mut buf, e)?;
            buf.push(b'\n');
        }
        f.write_all(&buf)?;
        f.sync_data()
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path)?;
    let mut log = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        log.push(from_json_str(line).map_err(|(p, m)| format!("{}:{}: at `{p}`: {m}", path.display(), i + 1))?);
    }
    Ok(log)
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/trials", post(create_trial))
        .route("/trials/{id}", get(get_trial))
        .route("/trials/{id}/events", post(post_events))
        .route("/trials/{id}/what-if", post(what_if))
        .route("/trials/{id}/finalize", post(finalize))
        .route("/trials/{id}/decision-table", get(decision_table))
        .with_state(state)
}

async fn create_trial(State(state): State<Shared>, body: String) -> Reply<impl IntoResponse> {
    let params: DesignParams = parse(&body)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), params)?;
    state.append(&id, session.log())?;
    let view = session.view();
    state
        .sessions
        .write()
        .await
        .insert(id, Arc::new(RwLock::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_trial(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Reply<impl IntoResponse> {
    let s = state.session(&id).await?;
    let view = s.read().await.view();
    Ok(Json(view))
}

async fn post_events(State(state): State<Shared>, UrlPath(id): UrlPath<String>, body: String) -> Reply<impl IntoResponse> {
    let s = state.session(&id).await?;
    let batch: EventBatch = parse(&body)?;
    let mut s = s.write().await;
    let mut next = s.clone();
    let before = next.log().len();
    next.post_events(batch)?;
    state.append(&id, &next.log()[before..])?;
    *s = next;
    Ok(Json(s.view()))
}

async fn what_if(State(state): State<Shared>, UrlPath(id): UrlPath<String>, body: String) -> Reply<impl IntoResponse> {
    let s = state.session(&id).await?;
    let q: WhatIf = parse(&body)?;
    let decision = s.read().await.what_if(q)?;
    Ok(Json(decision))
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FinalizeRequest {
    #[serde(default)]
    seed: Option<u64>,
}

async fn finalize(State(state): State<Shared>, UrlPath(id): UrlPath<String>, body: String) -> Reply<impl IntoResponse> {
    let s = state.session(&id).await?;
    let req: FinalizeRequest = parse(&body)?;
    let mut s = s.write().await;
    let mut next = s.clone();
    let before = next.log().len();
    next.finalize(req.seed.unwrap_or(DEFAULT_SEED))?;
    state.append(&id, &next.log()[before..])?;
    *s = next;
    Ok(Json(s.report().cloned()))
}

#[derive(Debug, Deserialize)]
struct TableQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn decision_table(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<TableQuery>,
) -> Reply<Response> {
    let s = state.session(&id).await?;
    let params = s.read().await.params.clone();
    let bounds = compute_boundaries(&params).map_err(ConductError::from)?;
    let c = params.cohort_size;
    let report = TableReport {
        config_hash: config_hash(&params),
        rows: generate_decision_table(&params, &bounds, &[c, 2 * c, 3 * c]),
    };
    Ok(match q.format.as_deref().unwrap_or("json") {
        "json" => Json(report).into_response(),
        "csv" => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], table_csv(&report)).into_response(),
        "text" => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], table_text(&report)).into_response(),
        other => {
            return Err(ConductError::Invalid {
                path: "format".into(),
                message: format!("unknown format `{other}`"),
            }
            .into())
        }
    })
}

pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await
}
