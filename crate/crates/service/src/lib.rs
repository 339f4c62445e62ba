//! Annotation sessions over HTTP.
//!
//! A session runs the consistent-form search and world generation in the
//! background, then alternates between suggesting a fictitious world and
//! pruning equivalence classes against the answer given for it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lfsearch_api::*;
use lfsearch_core::dpd::{run_dpd, DEFAULT_CAP};
use lfsearch_core::fictitious::{
    equivalence_classes, generate_worlds, greedy_next_world, prune, select_worlds, Annotation, EquivalenceClass,
    Expected, NextWorld as Next,
};
use lfsearch_core::pipeline::atomic_write;
use lfsearch_core::rules::RuleSet;
use lfsearch_core::target::Target;
use lfsearch_core::{build_world, Denotation, Table};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

/// Defaults applied where a request leaves a setting out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settings {
    pub s_max: usize,
    pub k: usize,
    pub l: usize,
    pub tolerance: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { s_max: 7, k: 30, l: 5, tolerance: 0, seed: 0 }
    }
}

impl Settings {
    fn with(self, c: &SessionConfig) -> Settings {
        Settings {
            s_max: c.s_max.unwrap_or(self.s_max),
            k: c.k.unwrap_or(self.k),
            l: c.l.unwrap_or(self.l),
            tolerance: c.tolerance.unwrap_or(self.tolerance),
            seed: c.seed.unwrap_or(self.seed),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Session {
    id: String,
    request: CreateSession,
    settings: Settings,
    state: SessionState,
    stats: Option<SearchStats>,
    tables: Vec<Table>,
    classes: Vec<EquivalenceClass>,
    annotations: BTreeMap<usize, Annotation>,
    served: BTreeSet<usize>,
    surviving: Vec<usize>,
    error: Option<String>,
}

struct Searched {
    stats: SearchStats,
    tables: Vec<Table>,
    classes: Vec<EquivalenceClass>,
}

fn search(req: &CreateSession, s: &Settings) -> Result<Searched, String> {
    let table = Table::new("session", req.table.columns.clone(), req.table.rows.clone()).map_err(|e| e.to_string())?;
    let target = Target::new(&req.answer).map_err(|e| e.to_string())?;
    let w = build_world(&table);
    let run = run_dpd(&req.question, &w, &target, &RuleSet::default(), s.s_max, DEFAULT_CAP);
    let ws = generate_worlds(&table, &req.question, s.k, s.seed).map_err(|e| e.to_string())?;
    let classes = equivalence_classes(&run.z.forms, &ws.worlds);
    Ok(Searched {
        stats: SearchStats {
            pass1_cells: run.stats.pass1_cells,
            pass2_cells: run.stats.pass2_cells,
            consistent_forms: run.stats.consistent_forms,
            truncated: run.stats.truncated,
        },
        tables: ws.tables,
        classes,
    })
}

impl Session {
    fn progress(&self) -> Progress {
        Progress {
            classes_initial: self.classes.len(),
            classes_surviving: self.surviving.len(),
            annotations: self.annotations.len(),
            worlds: self.tables.len(),
        }
    }

    fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            state: self.state,
            question: self.request.question.clone(),
            stats: self.stats.clone(),
            progress: self.progress(),
            annotations: self
                .annotations
                .values()
                .map(|a| AnnotationView {
                    world_id: a.world_id,
                    answer: a.answer.clone(),
                    annotator: a.annotator.clone(),
                    ts: a.ts.clone(),
                })
                .collect(),
            error: self.error.clone(),
        }
    }

    fn settle(&mut self) {
        self.state = match self.surviving.len() {
            0 => SessionState::AllPruned,
            1 => SessionState::Resolved,
            _ if self.annotations.len() >= self.tables.len() => SessionState::Exhausted,
            _ => SessionState::AwaitingAnnotation,
        };
    }

    fn finish_search(&mut self, outcome: Result<Searched, String>) {
        match outcome {
            Ok(s) => {
                self.stats = Some(s.stats);
                self.tables = s.tables;
                self.surviving = (0..s.classes.len()).collect();
                self.classes = s.classes;
                self.settle();
            }
            Err(e) => {
                self.error = Some(e);
                self.state = SessionState::Failed;
            }
        }
    }

    fn surviving_tuples(&self) -> Vec<&[Denotation]> {
        self.surviving.iter().map(|&q| self.classes[q].tuple.as_slice()).collect()
    }

    fn payload(&self, j: usize) -> WorldPayload {
        let t = &self.tables[j];
        WorldPayload { world_id: j, columns: t.columns.clone(), rows: t.rows.clone() }
    }

    fn reprune(&mut self) {
        let worlds: Vec<usize> = self.annotations.keys().copied().collect();
        let expected: Vec<Expected> = self
            .annotations
            .values()
            .map(|a| Expected::Answer(Target::new(&a.answer).expect("validated on submission")))
            .collect();
        self.surviving = prune(&self.classes, &worlds, &expected, self.settings.tolerance).survivors();
        self.settle();
    }

    fn summaries(&self, only_surviving: bool) -> Vec<ClassSummary> {
        let alive: BTreeSet<usize> = self.surviving.iter().copied().collect();
        let mut out: Vec<ClassSummary> = self
            .classes
            .iter()
            .filter(|c| !only_surviving || alive.contains(&c.id))
            .map(|c| ClassSummary {
                id: c.id,
                representative: c.representative.canonical_string(),
                members: c.members.len(),
                forms: c.members.iter().map(|z| z.canonical_string()).collect(),
                surviving: alive.contains(&c.id),
            })
            .collect();
        out.sort_by(|a, b| b.members.cmp(&a.members).then(a.id.cmp(&b.id)));
        out
    }
}

type SessionRef = Arc<tokio::sync::Mutex<Session>>;

pub struct AppState {
    sessions: parking_lot::RwLock<HashMap<String, SessionRef>>,
    keys: parking_lot::Mutex<HashMap<String, String>>,
    data_dir: Option<PathBuf>,
    defaults: Settings,
}

impl AppState {
    /// Loads any sessions saved under `data_dir`, restarting searches that
    /// were interrupted.
    pub fn new(data_dir: Option<PathBuf>, defaults: Settings) -> Arc<AppState> {
        let state = Arc::new(AppState {
            sessions: Default::default(),
            keys: Default::default(),
            data_dir,
            defaults,
        });
        if let Some(dir) = &state.data_dir {
            if let Ok(raw) = std::fs::read_to_string(dir.join("idempotency.json")) {
                *state.keys.lock() = serde_json::from_str(&raw).unwrap_or_default();
            }
            for entry in std::fs::read_dir(dir.join("sessions")).into_iter().flatten().flatten() {
                let Ok(raw) = std::fs::read_to_string(entry.path()) else { continue };
                match serde_json::from_str::<Session>(&raw) {
                    Ok(s) => {
                        let searching = s.state == SessionState::Searching;
                        let id = s.id.clone();
                        let r = Arc::new(tokio::sync::Mutex::new(s));
                        state.sessions.write().insert(id, r.clone());
                        if searching {
                            spawn_search(state.clone(), r);
                        }
                    }
                    Err(e) => tracing::warn!(path = %entry.path().display(), "skipping snapshot: {e}"),
                }
            }
        }
        state
    }

    fn persist(&self, s: &Session) {
        let Some(dir) = &self.data_dir else { return };
        let body = serde_json::to_vec(s).expect("serializable");
        if let Err(e) = atomic_write(&dir.join("sessions").join(format!("{}.json", s.id)), &body) {
            tracing::error!("saving session {}: {e}", s.id);
        }
    }

    fn persist_keys(&self) {
        let Some(dir) = &self.data_dir else { return };
        let body = serde_json::to_vec(&*self.keys.lock()).expect("serializable");
        if let Err(e) = atomic_write(&dir.join("idempotency.json"), &body) {
            tracing::error!("saving idempotency keys: {e}");
        }
    }

    fn get(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions.read().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }
}

fn spawn_search(state: Arc<AppState>, session: SessionRef) {
    tokio::spawn(async move {
        let (req, settings) = {
            let s = session.lock().await;
            (s.request.clone(), s.settings)
        };
        let outcome = tokio::task::spawn_blocking(move || search(&req, &settings))
            .await
            .unwrap_or_else(|e| Err(format!("search crashed: {e}")));
        let mut s = session.lock().await;
        s.finish_search(outcome);
        state.persist(&s);
    });
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, detail: impl Into<String>) -> ApiError {
        ApiError { status, detail: detail.into() }
    }

    fn not_found(id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let problem = Problem {
            kind: "about:blank".into(),
            title: self.status.canonical_reason().unwrap_or("Error").into(),
            status: self.status.as_u16(),
            detail: self.detail,
        };
        (self.status, [(header::CONTENT_TYPE, "application/problem+json")], Json(problem)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError::new(r.status(), r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn create(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let Json(req) = body?;
    let key = headers.get(IDEMPOTENCY_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string);
    if let Some(id) = key.as_ref().and_then(|k| state.keys.lock().get(k).cloned()) {
        let s = state.get(&id)?;
        let view = s.lock().await.view();
        return Ok((StatusCode::OK, Json(view)));
    }
    Table::new("session", req.table.columns.clone(), req.table.rows.clone())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    Target::new(&req.answer).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let settings = state.defaults.with(&req.config);
    if settings.k == 0 || settings.s_max == 0 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "s_max and k must be positive"));
    }
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session {
        id: id.clone(),
        request: req,
        settings,
        state: SessionState::Searching,
        stats: None,
        tables: Vec::new(),
        classes: Vec::new(),
        annotations: BTreeMap::new(),
        served: BTreeSet::new(),
        surviving: Vec::new(),
        error: None,
    };
    let view = session.view();
    state.persist(&session);
    let r = Arc::new(tokio::sync::Mutex::new(session));
    state.sessions.write().insert(id.clone(), r.clone());
    if let Some(k) = key {
        state.keys.lock().insert(k, id);
        state.persist_keys();
    }
    spawn_search(state, r);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    let s = state.get(&id)?;
    let view = s.lock().await.view();
    Ok(Json(view))
}

#[derive(Deserialize)]
struct NextQuery {
    #[serde(default)]
    mode: Option<String>,
}

fn searching(s: &Session) -> ApiResult<()> {
    if s.state == SessionState::Searching {
        return Err(ApiError::new(StatusCode::CONFLICT, "search still running"));
    }
    Ok(())
}

async fn next_world(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Json<NextWorld>> {
    let r = state.get(&id)?;
    let mut s = r.lock().await;
    searching(&s)?;
    let batch = match q.mode.as_deref() {
        None | Some("greedy") => false,
        Some("batch") => true,
        Some(other) => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown mode {other}"))),
    };
    let mut out = NextWorld {
        done: true,
        state: s.state,
        question: s.request.question.clone(),
        world: None,
        worlds: Vec::new(),
        objective: None,
        progress: s.progress(),
    };
    if s.state.is_terminal() {
        return Ok(Json(out));
    }
    if batch {
        let sel = select_worlds(&s.surviving_tuples(), s.settings.l, false)
            .map_err(|e| ApiError::new(StatusCode::CONFLICT, e.to_string()))?;
        s.served.extend(sel.worlds.iter().copied());
        out.worlds = sel.worlds.iter().map(|&j| s.payload(j)).collect();
        out.objective = Some(sel.objective);
        out.done = false;
    } else {
        let annotated: Vec<usize> = s.annotations.keys().copied().collect();
        match greedy_next_world(&s.surviving_tuples(), &annotated, s.tables.len()) {
            Next::World(j) => {
                s.served.insert(j);
                out.world = Some(s.payload(j));
                out.done = false;
            }
            Next::NoneNeeded => s.state = SessionState::Resolved,
            Next::Exhausted => s.state = SessionState::Exhausted,
        }
    }
    out.state = s.state;
    state.persist(&s);
    Ok(Json(out))
}

async fn annotate(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AnnotationRequest>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    let Json(req) = body?;
    let r = state.get(&id)?;
    let mut s = r.lock().await;
    searching(&s)?;
    if s.state == SessionState::Failed {
        return Err(ApiError::new(StatusCode::CONFLICT, "session failed"));
    }
    if !s.served.contains(&req.world_id) {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("world {} was not served", req.world_id)));
    }
    let target = Target::new(&req.answer).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string();
    s.annotations.insert(
        req.world_id,
        Annotation {
            world_id: req.world_id,
            answer: target.answers().to_vec(),
            annotator: req.annotator.unwrap_or_default(),
            ts,
        },
    );
    s.reprune();
    state.persist(&s);
    Ok(Json(s.view()))
}

async fn result(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ResultView>> {
    let r = state.get(&id)?;
    let s = r.lock().await;
    searching(&s)?;
    Ok(Json(ResultView {
        state: s.state,
        all_pruned: s.state == SessionState::AllPruned,
        classes: s.summaries(true),
    }))
}

async fn classes(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ClassesView>> {
    let r = state.get(&id)?;
    let s = r.lock().await;
    searching(&s)?;
    Ok(Json(ClassesView { state: s.state, classes: s.summaries(false) }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such route")
}

/// The REST routes, plus static annotator assets under `/ui` when `ui_dir`
/// is given.
pub fn app(state: Arc<AppState>, ui_dir: Option<&Path>) -> Router {
    let mut router = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next-world", get(next_world))
        .route("/sessions/{id}/annotations", post(annotate))
        .route("/sessions/{id}/result", get(result))
        .route("/sessions/{id}/classes", get(classes))
        .fallback(fallback);
    if let Some(dir) = ui_dir {
        router = router.nest_service("/ui", ServeDir::new(dir));
    }
    router.with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(addr: &str, data_dir: Option<PathBuf>, ui_dir: Option<PathBuf>, defaults: Settings) -> std::io::Result<()> {
    let state = AppState::new(data_dir, defaults);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state, ui_dir.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn init_tracing() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .try_init();
}
