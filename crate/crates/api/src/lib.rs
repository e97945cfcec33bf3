//! HTTP facade over planning sessions.
//!
//! Each session is an event log `<data dir>/<id>.jsonl`. Requests on one
//! session are serialized; different sessions proceed concurrently. A
//! generation that outlives [`Config::async_after`] turns into a job the
//! client polls at `/jobs/{id}`.

pub mod error;
pub mod view;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dor_core::session::{FitSpec, MergeDirective, RankInput, Session};
use dor_core::spacetime::ScenarioSpec;
use dor_core::{CardRanking, PlanningInstance};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex as SessionLock;

use error::{ApiError, Detail};
use view::{iteration_view, session_view, IterationView};

pub const OPENAPI: &str = include_str!("../../../schemas/openapi.json");

#[derive(Clone, Debug)]
pub struct Config {
    pub data_dir: PathBuf,
    /// Generation requests running longer than this answer 202 with a job.
    pub async_after: Duration,
}

impl Config {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Config {
            data_dir: data_dir.into(),
            async_after: Duration::from_secs(2),
        }
    }
}

type Handle = Arc<SessionLock<Session>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum JobState {
    Running,
    Done { result: IterationView },
    Failed { error: ApiError },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub session: String,
    #[serde(flatten)]
    pub state: JobState,
}

pub struct AppState {
    config: Config,
    sessions: Mutex<HashMap<String, Handle>>,
    jobs: Mutex<HashMap<String, Job>>,
}

impl AppState {
    pub fn new(config: Config) -> Arc<Self> {
        Arc::new(AppState {
            config,
            sessions: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
        })
    }

    /// Looks a session up, replaying its log on first access.
    async fn session(&self, id: &str) -> Result<Handle, ApiError> {
        if let Some(h) = self.sessions.lock().unwrap().get(id) {
            return Ok(h.clone());
        }
        let missing = || ApiError::not_found(format!("unknown session '{id}'"));
        // Only ids we could have issued map to files.
        uuid::Uuid::parse_str(id).map_err(|_| missing())?;
        let path = self.config.data_dir.join(format!("{id}.jsonl"));
        if !path.is_file() {
            return Err(missing());
        }
        let session = tokio::task::spawn_blocking(move || Session::open(path))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::from_session(e, false))?;
        let mut map = self.sessions.lock().unwrap();
        Ok(map
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(SessionLock::new(session)))
            .clone())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/openapi.json", get(openapi))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/generate", post(generate))
        .route("/sessions/{id}/rankings", post(rank))
        .route("/sessions/{id}/fits", post(fit))
        .route("/sessions/{id}/accept", post(accept))
        .route("/jobs/{id}", get(get_job))
        .fallback(|| async { ApiError::not_found("no such resource") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method-not-allowed", "method not allowed here")
        })
        .with_state(state)
}

/// Parses a JSON body: 400 when it is not JSON, 422 when it has the wrong
/// shape.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let value: serde_json::Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed-json", e.to_string()))?;
    from_value(value)
}

fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T, ApiError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        ApiError::invalid(format!("request body: {message}")).with_details(vec![Detail { path, message }])
    })
}

/// Splits an optional `iteration` field off a request body.
fn take_iteration(body: &[u8]) -> Result<(Option<usize>, serde_json::Value), ApiError> {
    let mut value: serde_json::Value = parse(body)?;
    let iteration = match value.as_object_mut().and_then(|o| o.remove("iteration")) {
        Some(v) => Some(from_value(v).map_err(|e| {
            e.with_details(vec![Detail {
                path: "iteration".into(),
                message: "expected a positive integer".into(),
            }])
        })?),
        None => None,
    };
    Ok((iteration, value))
}

fn latest(s: &Session, requested: Option<usize>) -> Result<usize, ApiError> {
    match requested {
        Some(n) => Ok(n),
        None => s
            .latest_iteration()
            .map(|it| it.number)
            .ok_or_else(|| ApiError::invalid("the session has no iterations yet")),
    }
}

/// Runs a blocking session operation under the session's lock.
async fn with_session<T, F>(handle: Handle, op: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
{
    let mut guard = handle.lock_owned().await;
    tokio::task::spawn_blocking(move || op(&mut guard))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI).into_response()
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let _: serde_json::Value = parse(&body)?;
    let text = String::from_utf8(body.to_vec()).map_err(|e| ApiError::invalid(e.to_string()))?;
    let instance = PlanningInstance::from_json(&text).map_err(|e| ApiError::from_session(e.into(), false))?;
    let id = uuid::Uuid::new_v4().to_string();
    let path = state.config.data_dir.join(format!("{id}.jsonl"));
    let session = tokio::task::spawn_blocking(move || Session::create(path, instance))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::from_session(e, false))?;
    state
        .sessions
        .lock()
        .unwrap()
        .insert(id.clone(), Arc::new(SessionLock::new(session)));
    log::info!("created session {id}");
    let location = format!("/sessions/{id}");
    Ok((StatusCode::CREATED, [(header::LOCATION, location)], Json(Created { id })).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let handle = state.session(&id).await?;
    let s = handle.lock().await;
    Ok(Json(session_view(&id, &s)?).into_response())
}

/// Accepts a scenario array, bare or as `{"scenarios": [...]}`.
async fn generate(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let grid = match parse(&body)? {
        serde_json::Value::Object(mut o) => o
            .remove("scenarios")
            .ok_or_else(|| ApiError::invalid("expected a scenario array or an object with 'scenarios'"))?,
        other => other,
    };
    let scenarios: Vec<ScenarioSpec> = from_value(grid)?;
    let handle = state.session(&id).await?;
    let mut task = tokio::spawn(with_session(handle, |s| {
        let n = s.generate(scenarios).map_err(|e| ApiError::from_session(e, false))?.number;
        let it = s.iteration(n).map_err(|e| ApiError::from_session(e, false))?;
        iteration_view(s, it, !it.plans.is_empty())
    }));
    match tokio::time::timeout(state.config.async_after, &mut task).await {
        Ok(joined) => {
            let view = joined.map_err(|e| ApiError::internal(e.to_string()))??;
            Ok(Json(view).into_response())
        }
        Err(_) => {
            let job = uuid::Uuid::new_v4().to_string();
            state.jobs.lock().unwrap().insert(
                job.clone(),
                Job {
                    id: job.clone(),
                    session: id.clone(),
                    state: JobState::Running,
                },
            );
            let watcher = state.clone();
            let job_id = job.clone();
            tokio::spawn(async move {
                let outcome = match task.await {
                    Ok(Ok(result)) => JobState::Done { result },
                    Ok(Err(error)) => JobState::Failed { error },
                    Err(e) => JobState::Failed {
                        error: ApiError::internal(e.to_string()),
                    },
                };
                if let Some(j) = watcher.jobs.lock().unwrap().get_mut(&job_id) {
                    j.state = outcome;
                }
            });
            log::info!("session {id}: generation continues as job {job}");
            let poll = format!("/jobs/{job}");
            let body = Json(serde_json::json!({"job": job, "poll": poll}));
            Ok((StatusCode::ACCEPTED, [(header::LOCATION, poll)], body).into_response())
        }
    }
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let jobs = state.jobs.lock().unwrap();
    let job = jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown job '{id}'")))?;
    Ok(Json(job).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankBody {
    name: String,
    #[serde(default)]
    ranking: Option<CardRanking>,
    #[serde(default)]
    merge: Option<MergeDirective>,
}

async fn rank(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let (iteration, rest) = take_iteration(&body)?;
    let RankBody { name, ranking, merge } = from_value(rest)?;
    let input = RankInput { name, ranking, merge };
    let handle = state.session(&id).await?;
    let scores = with_session(handle, move |s| {
        let n = latest(s, iteration)?;
        s.rank(n, input).map_err(|e| ApiError::from_session(e, false))
    })
    .await?;
    Ok(Json(scores).into_response())
}

async fn fit(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let (iteration, rest) = take_iteration(&body)?;
    let spec: FitSpec = from_value(rest)?;
    let handle = state.session(&id).await?;
    let result = with_session(handle, move |s| {
        let n = latest(s, iteration)?;
        s.fit(n, spec).map_err(|e| ApiError::from_session(e, false))
    })
    .await?;
    Ok(Json(result).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptBody {
    plan: String,
}

async fn accept(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let AcceptBody { plan } = parse(&body)?;
    let handle = state.session(&id).await?;
    let view = with_session(handle, move |s| {
        s.accept(&plan).map_err(|e| ApiError::from_session(e, true))?;
        session_view(&id, s)
    })
    .await?;
    Ok(Json(view).into_response())
}
