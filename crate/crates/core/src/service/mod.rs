//! HTTP+JSON interface under `/api/v1`.
//!
//! Uploads and experiment results live as flat files in the data directory.
//! Experiments run on a FIFO queue served by a fixed pool of workers;
//! interactive sessions and simulations are kept in memory and each is
//! guarded by its own lock.

mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Multipart, Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;

pub use store::{
    content_hash, ErrorBody, ExperimentRecord, Job, Status, Store, StoredController, CSV_FILE,
    DK_FILE, METADATA_FILE, STRATEGY_FILE, TRANSITIONS_FILE,
};

use crate::bench::is_exact;
use crate::builder::{build_tree, retrain_subtree, BuildConfig, Session};
use crate::error::Error;
use crate::export::{export, export_json, import_json, predicate_from_json, ExportFormat};
use crate::model::DecisionTree;
use crate::simulate::{parse_state, Simulation};

/// Default number of experiment workers.
pub const DEFAULT_WORKERS: usize = 2;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn not_found(what: &str, id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            body: ErrorBody {
                kind: "NotFound".into(),
                detail: format!("no {what} `{id}`"),
            },
        }
    }

    fn conflict(kind: &str, detail: String) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            body: ErrorBody {
                kind: kind.into(),
                detail,
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match err {
            Error::UnknownNode(_) => StatusCode::NOT_FOUND,
            Error::SessionClosed | Error::IncompleteTree(_) => StatusCode::CONFLICT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError {
            status,
            body: ErrorBody::from(&err),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.body }))).into_response()
    }
}

type ApiResult<T = Json<Value>> = std::result::Result<T, ApiError>;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    let bytes: &[u8] = if bytes.is_empty() { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| Error::from(e).into())
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn random_id() -> String {
    format!("{:016x}", rand::random::<u64>())
}

struct SessionEntry {
    controller_id: String,
    session: Session,
}

/// Shared server state.
pub struct AppState {
    store: Store,
    experiments: Mutex<HashMap<String, ExperimentRecord>>,
    queue: mpsc::UnboundedSender<String>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    simulations: Mutex<HashMap<String, Arc<Mutex<Simulation>>>>,
}

impl AppState {
    /// Opens the data directory and starts `workers` experiment workers.
    /// Experiments left queued or running by a previous process are
    /// queued again. Must be called inside a tokio runtime.
    pub fn open(data_dir: &Path, workers: usize) -> crate::Result<Arc<Self>> {
        let store = Store::open(data_dir)?;
        let (tx, rx) = mpsc::unbounded_channel();
        let records = store.load_experiments()?;
        let state = Arc::new(AppState {
            store,
            experiments: Mutex::new(HashMap::new()),
            queue: tx,
            sessions: Mutex::new(HashMap::new()),
            simulations: Mutex::new(HashMap::new()),
        });
        for mut record in records {
            let pending = matches!(record.status, Status::Queued | Status::Running);
            if pending {
                record.status = Status::Queued;
            }
            let id = record.experiment_id.clone();
            lock(&state.experiments).insert(id.clone(), record);
            if pending {
                let _ = state.queue.send(id);
            }
        }
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..workers.max(1) {
            let state = state.clone();
            let rx = rx.clone();
            tokio::spawn(async move {
                loop {
                    let next = rx.lock().await.recv().await;
                    let Some(id) = next else { break };
                    let job_state = state.clone();
                    let _ = tokio::task::spawn_blocking(move || job_state.run_job(&id)).await;
                }
            });
        }
        Ok(state)
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn experiment(&self, id: &str) -> Option<ExperimentRecord> {
        lock(&self.experiments).get(id).cloned()
    }

    fn controller(&self, id: &str) -> ApiResult<Arc<StoredController>> {
        self.store
            .controller(id)?
            .ok_or_else(|| ApiError::not_found("controller", id))
    }

    fn update(&self, record: ExperimentRecord) {
        let _ = self.store.save_experiment(&record);
        lock(&self.experiments).insert(record.experiment_id.clone(), record);
    }

    fn enqueue(&self, record: ExperimentRecord) -> ApiResult<ExperimentRecord> {
        if let Some(existing) = self.experiment(&record.experiment_id) {
            if existing.status != Status::Failed {
                return Ok(existing);
            }
        }
        self.store.save_experiment(&record)?;
        lock(&self.experiments).insert(record.experiment_id.clone(), record.clone());
        let _ = self.queue.send(record.experiment_id.clone());
        Ok(record)
    }

    fn run_job(&self, id: &str) {
        let Some(mut record) = self.experiment(id) else {
            return;
        };
        record.status = Status::Running;
        self.update(record.clone());
        match self.execute(&record) {
            Ok((tree, controller, time_ms)) => {
                let saved = self.store.save_tree(id, &export_json(&tree));
                record.stats = Some(tree.stats());
                record.exact = Some(is_exact(&tree, &controller.controller));
                record.time_ms = Some(time_ms);
                match saved {
                    Ok(()) => record.status = Status::Done,
                    Err(err) => {
                        record.status = Status::Failed;
                        record.error = Some(ErrorBody::from(&err));
                    }
                }
            }
            Err(err) => {
                record.status = Status::Failed;
                record.error = Some(ErrorBody::from(&err));
            }
        }
        self.update(record);
    }

    fn execute(
        &self,
        record: &ExperimentRecord,
    ) -> crate::Result<(DecisionTree, Arc<StoredController>, f64)> {
        let stored = self
            .store
            .controller(&record.controller_id)?
            .ok_or_else(|| {
                Error::Io(format!("controller `{}` is missing", record.controller_id))
            })?;
        let start = Instant::now();
        let tree = match &record.job {
            Job::Build => build_tree(&stored.controller, &record.config)?,
            Job::Retrain { source, node_id } => {
                let text = self
                    .store
                    .load_tree(source)?
                    .ok_or_else(|| Error::Io(format!("tree `{source}` is missing")))?;
                retrain_subtree(
                    &import_json(&text)?,
                    *node_id,
                    &stored.controller,
                    &record.config,
                )?
            }
        };
        Ok((tree, stored, start.elapsed().as_secs_f64() * 1000.0))
    }

    fn done_tree(&self, id: &str) -> ApiResult<(ExperimentRecord, DecisionTree)> {
        let record = self
            .experiment(id)
            .ok_or_else(|| ApiError::not_found("experiment", id))?;
        if record.status != Status::Done {
            return Err(ApiError::conflict(
                "NotReady",
                format!("experiment `{id}` is {:?}", record.status).to_lowercase(),
            ));
        }
        let text = self
            .store
            .load_tree(id)?
            .ok_or_else(|| ApiError::not_found("tree", id))?;
        Ok((record, import_json(&text)?))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<SessionEntry>>> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn simulation(&self, id: &str) -> ApiResult<Arc<Mutex<Simulation>>> {
        lock(&self.simulations)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("simulation", id))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/controllers", post(upload_controller))
        .route("/controllers/{id}", get(get_controller))
        .route("/experiments", post(create_experiment))
        .route("/experiments/{id}", get(get_experiment))
        .route("/experiments/{id}/tree", get(get_experiment_tree))
        .route("/experiments/{id}/export", get(export_experiment))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/node", get(session_node))
        .route("/sessions/{id}/evaluate", post(session_evaluate))
        .route("/sessions/{id}/split", post(session_split))
        .route("/sessions/{id}/autocomplete", post(session_autocomplete))
        .route("/sessions/{id}/goto", post(session_goto))
        .route("/sessions/{id}/tree", get(session_tree))
        .route("/trees/{id}/retrain", post(retrain))
        .route("/simulations", post(create_simulation))
        .route("/simulations/{id}", get(get_simulation))
        .route("/simulations/{id}/step", post(simulation_step))
        .fallback(|| async { ApiError::not_found("endpoint", "") });
    Router::new().nest("/api/v1", api).with_state(state)
}

/// Serves the API on `port` until the process is stopped.
pub async fn serve(port: u16, data_dir: &Path) -> crate::Result<()> {
    let state = AppState::open(data_dir, DEFAULT_WORKERS)?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn controller_summary(stored: &StoredController) -> Value {
    let c = &stored.controller;
    json!({
        "controller_id": stored.id,
        "states": c.len(),
        "variables": c.variables(),
        "actions": c.labels(),
        "permissive": c.is_permissive(),
        "templates": stored.templates.len(),
        "transitions": stored.transitions.is_some(),
    })
}

async fn upload_controller(State(state): State<Arc<AppState>>, mut form: Multipart) -> ApiResult {
    let mut files = HashMap::new();
    loop {
        let field = form
            .next_field()
            .await
            .map_err(|e| Error::InvalidConfig(format!("bad multipart body: {e}")))?;
        let Some(field) = field else { break };
        let name = field.name().unwrap_or_default().to_string();
        let file = match name.as_str() {
            "csv" => CSV_FILE,
            "strategy" | "strategy-json" | "strategy_json" => STRATEGY_FILE,
            "metadata" => METADATA_FILE,
            "dk" => DK_FILE,
            "transitions" => TRANSITIONS_FILE,
            other => {
                return Err(Error::InvalidConfig(format!("unexpected form field `{other}`")).into())
            }
        };
        let text = field
            .text()
            .await
            .map_err(|e| Error::InvalidConfig(format!("field `{name}`: {e}")))?;
        files.insert(file.to_string(), text);
    }
    let stored = tokio::task::spawn_blocking(move || state.store.put_controller(files))
        .await
        .map_err(|e| Error::Io(e.to_string()))??;
    Ok(Json(controller_summary(&stored)))
}

async fn get_controller(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let stored = state.controller(&id)?;
    Ok(Json(controller_summary(&stored)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentRequest {
    controller_id: String,
    #[serde(default)]
    config: BuildConfig,
}

fn experiment_json(record: &ExperimentRecord) -> Value {
    serde_json::to_value(record).expect("record serializes")
}

async fn create_experiment(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult {
    let req: ExperimentRequest = body(&bytes)?;
    let stored = state.controller(&req.controller_id)?;
    let config = stored.effective_config(&req.config);
    config.validate()?;
    let fingerprint = config.fingerprint();
    let record = ExperimentRecord {
        experiment_id: content_hash(&[("build", &stored.id), ("config", &fingerprint)]),
        controller_id: stored.id.clone(),
        job: Job::Build,
        warnings: stored.warnings(&config),
        config,
        fingerprint,
        status: Status::Queued,
        stats: None,
        exact: None,
        time_ms: None,
        error: None,
    };
    Ok(Json(experiment_json(&state.enqueue(record)?)))
}

async fn get_experiment(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let record = state
        .experiment(&id)
        .ok_or_else(|| ApiError::not_found("experiment", &id))?;
    Ok(Json(experiment_json(&record)))
}

async fn get_experiment_tree(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let (_, tree) = state.done_tree(&id)?;
    Ok(Json(
        serde_json::from_str(&export_json(&tree)).map_err(Error::from)?,
    ))
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export_experiment(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult {
    let format_name = q.format.unwrap_or_else(|| "json".into());
    let format: ExportFormat = format_name.parse()?;
    let (_, tree) = state.done_tree(&id)?;
    Ok(Json(json!({
        "format": format_name.to_ascii_lowercase(),
        "content": export(&tree, format)?,
    })))
}

#[derive(Deserialize)]
struct RetrainRequest {
    node_id: usize,
    #[serde(default)]
    config: BuildConfig,
}

async fn retrain(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: RetrainRequest = body(&bytes)?;
    let (source, tree) = state.done_tree(&id)?;
    tree.node(req.node_id)?;
    let stored = state.controller(&source.controller_id)?;
    let config = stored.effective_config(&req.config);
    config.validate()?;
    let fingerprint = config.fingerprint();
    let node = req.node_id.to_string();
    let record = ExperimentRecord {
        experiment_id: content_hash(&[("retrain", &id), ("node", &node), ("config", &fingerprint)]),
        controller_id: stored.id.clone(),
        job: Job::Retrain {
            source: id.clone(),
            node_id: req.node_id,
        },
        warnings: stored.warnings(&config),
        config,
        fingerprint,
        status: Status::Queued,
        stats: None,
        exact: None,
        time_ms: None,
        error: None,
    };
    Ok(Json(experiment_json(&state.enqueue(record)?)))
}

fn session_state(session: &Session) -> Value {
    json!({ "cursor": session.cursor(), "complete": session.is_complete() })
}

async fn create_session(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult {
    let req: ExperimentRequest = body(&bytes)?;
    let stored = state.controller(&req.controller_id)?;
    let config = stored.effective_config(&req.config);
    let warnings = stored.warnings(&config);
    let session = Session::new(&stored.controller, config)?;
    let id = random_id();
    let mut out = session_state(&session);
    out["session_id"] = json!(id);
    out["warnings"] = json!(warnings);
    lock(&state.sessions).insert(
        id,
        Arc::new(Mutex::new(SessionEntry {
            controller_id: stored.id.clone(),
            session,
        })),
    );
    Ok(Json(out))
}

async fn session_node(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let entry = state.session(&id)?;
    let entry = lock(&entry);
    Ok(Json(
        serde_json::to_value(entry.session.node_report()?).map_err(Error::from)?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateRequest {
    #[serde(default)]
    expr: Option<String>,
    #[serde(default)]
    predicate: Option<Value>,
}

impl PredicateRequest {
    fn resolve(&self, session: &Session) -> ApiResult<crate::predicates::Predicate> {
        match (&self.expr, &self.predicate) {
            (Some(text), None) => Ok(session.parse_predicate(text)?),
            (None, Some(value)) => Ok(predicate_from_json(
                value,
                session.controller().variables(),
            )?),
            _ => Err(
                Error::InvalidConfig("give exactly one of `expr` and `predicate`".into()).into(),
            ),
        }
    }
}

async fn session_evaluate(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: PredicateRequest = body(&bytes)?;
    let entry = state.session(&id)?;
    let entry = lock(&entry);
    let pred = req.resolve(&entry.session)?;
    Ok(Json(
        serde_json::to_value(entry.session.evaluate(&pred)?).map_err(Error::from)?,
    ))
}

async fn session_split(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: PredicateRequest = body(&bytes)?;
    let entry = state.session(&id)?;
    let mut entry = lock(&entry);
    let pred = req.resolve(&entry.session)?;
    let children = entry.session.apply(pred)?;
    let mut out = session_state(&entry.session);
    out["children"] = json!(children);
    Ok(Json(out))
}

async fn session_autocomplete(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let entry = state.session(&id)?;
    let mut entry = lock(&entry);
    entry.session.autocomplete()?;
    let tree = entry.session.tree()?;
    let mut out = session_state(&entry.session);
    out["stats"] = json!(tree.stats());
    Ok(Json(out))
}

#[derive(Deserialize)]
struct GotoRequest {
    node_id: usize,
}

async fn session_goto(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: GotoRequest = body(&bytes)?;
    let entry = state.session(&id)?;
    let mut entry = lock(&entry);
    entry.session.goto(req.node_id)?;
    Ok(Json(session_state(&entry.session)))
}

async fn session_tree(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let entry = state.session(&id)?;
    let entry = lock(&entry);
    let mut out = json!({
        "controller_id": entry.controller_id,
        "snapshot": entry.session.snapshot(),
        "complete": entry.session.is_complete(),
    });
    if entry.session.is_complete() {
        let text = export_json(&entry.session.tree()?);
        out["tree"] = serde_json::from_str(&text).map_err(Error::from)?;
    }
    Ok(Json(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationRequest {
    /// An experiment id, or `session:<id>` for a completed session.
    tree_ref: String,
    initial_state: Vec<Value>,
}

async fn create_simulation(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult {
    let req: SimulationRequest = body(&bytes)?;
    let (tree, controller_id) = match req.tree_ref.strip_prefix("session:") {
        Some(sid) => {
            let entry = state.session(sid)?;
            let entry = lock(&entry);
            (entry.session.tree()?, entry.controller_id.clone())
        }
        None => {
            let (record, tree) = state.done_tree(&req.tree_ref)?;
            (tree, record.controller_id)
        }
    };
    let stored = state.controller(&controller_id)?;
    let initial = parse_state(&req.initial_state, tree.variables())?;
    let sim = Simulation::new(tree, initial, stored.transitions.clone())?;
    let path = sim.current_path()?;
    let id = random_id();
    lock(&state.simulations).insert(id.clone(), Arc::new(Mutex::new(sim)));
    Ok(Json(json!({ "sim_id": id, "path": path })))
}

fn simulation_json(sim: &Simulation) -> ApiResult {
    Ok(Json(json!({
        "current": sim.current(),
        "path": sim.current_path()?,
        "trace": sim.trace(),
    })))
}

async fn get_simulation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult {
    let sim = state.simulation(&id)?;
    let sim = lock(&sim);
    simulation_json(&sim)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRequest {
    action: String,
    #[serde(default)]
    next_state: Option<Vec<Value>>,
}

async fn simulation_step(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: StepRequest = body(&bytes)?;
    let sim = state.simulation(&id)?;
    let mut sim = lock(&sim);
    let next = req
        .next_state
        .map(|values| parse_state(&values, sim.tree().variables()))
        .transpose()?;
    let path = sim.step(&req.action, next)?;
    Ok(Json(serde_json::to_value(path).map_err(Error::from)?))
}
