//! HTTP API used by the companion UI.
//!
//! | method | path                          | body / query                                  |
//! |--------|-------------------------------|-----------------------------------------------|
//! | POST   | `/api/datasets`               | raw CSV; `?class_col=`, `?name=`              |
//! | GET    | `/api/datasets/{id}`          | dataset summary                               |
//! | GET    | `/api/datasets/{id}/scores`   | `?bins=&thresholds=low,high&corr_decimals=`   |
//! | GET    | `/api/datasets/{id}/graph`    | same query as scores                          |
//! | POST   | `/api/datasets/{id}/evaluate` | JSON evaluation request; `?wait=true`         |
//! | GET    | `/api/jobs/{id}`              | job status, progress and report when done     |
//! | GET    | `/api/jobs/{id}/report`       | the report alone, once the job has finished   |
//!
//! Results are cached per session and parameter set, and each cache entry
//! is computed at most once even under concurrent requests.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::sync::{watch, OnceCell, Semaphore};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::baselines::Method;
use crate::dataset::{parse_csv, ClassColumn, Dataset, LoadOptions};
use crate::error::Error;
use crate::fam::{build_fam_graph, export_graph, FamOptions, GraphFormat, Thresholds};
use crate::harness::{
    render_report, run_experiment_with_progress, ExperimentConfig, Progress, ReportFormat,
};
use crate::models::{ClassifierKind, ClassifierSpec};
use crate::scoring::{famex_with_graph, FamexConfig};

pub const DEFAULT_MAX_UPLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub static_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
    /// Sessions and finished jobs untouched for this long are dropped.
    pub idle_ttl: Duration,
    pub max_concurrent_jobs: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            static_dir: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD,
            idle_ttl: Duration::from_secs(30 * 60),
            max_concurrent_jobs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(e: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.to_string())
    }

    fn unprocessable(e: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} '{id}'"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Cached = Arc<OnceCell<Result<Arc<String>, ApiError>>>;

struct Session {
    dataset: Arc<Dataset>,
    last_used: Mutex<Instant>,
    scores: Mutex<HashMap<String, Cached>>,
    graphs: Mutex<HashMap<String, Cached>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

struct Job {
    id: String,
    status: Mutex<JobStatus>,
    progress: Mutex<Progress>,
    result: OnceLock<Result<Arc<String>, ApiError>>,
    done: watch::Sender<bool>,
    last_used: Mutex<Instant>,
}

impl Job {
    fn snapshot(&self) -> Value {
        let status = *self.status.lock().unwrap();
        let progress = *self.progress.lock().unwrap();
        let mut v = json!({ "id": self.id, "status": status, "progress": progress });
        match self.result.get() {
            Some(Ok(report)) => {
                v["report"] = serde_json::from_str(report).unwrap_or(Value::Null);
            }
            Some(Err(e)) => v["error"] = Value::String(e.message.clone()),
            None => {}
        }
        v
    }

    async fn wait(&self) -> Result<Arc<String>, ApiError> {
        let mut rx = self.done.subscribe();
        let _ = rx.wait_for(|d| *d).await;
        self.result
            .get()
            .cloned()
            .unwrap_or_else(|| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "job vanished")))
    }
}

struct Inner {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    workers: Arc<Semaphore>,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        let workers = Arc::new(Semaphore::new(config.max_concurrent_jobs.max(1)));
        AppState(Arc::new(Inner {
            config,
            sessions: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
            workers,
        }))
    }

    fn evict_idle(&self) {
        let ttl = self.0.config.idle_ttl;
        let now = Instant::now();
        self.0
            .sessions
            .lock()
            .unwrap()
            .retain(|_, s| now.duration_since(*s.last_used.lock().unwrap()) < ttl);
        self.0.jobs.lock().unwrap().retain(|_, j| {
            j.result.get().is_none() || now.duration_since(*j.last_used.lock().unwrap()) < ttl
        });
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.evict_idle();
        let s = self
            .0
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("dataset", id))?;
        *s.last_used.lock().unwrap() = Instant::now();
        Ok(s)
    }
}

fn hex_digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the API router around `state`.
pub fn router(state: AppState) -> Router {
    let limit = state.0.config.max_upload_bytes;
    let static_dir = state.0.config.static_dir.clone();
    let api = Router::new()
        .route("/api/health", get(|| async { "ok" }))
        .route("/api/datasets", post(upload))
        .route("/api/datasets/{id}", get(summary))
        .route("/api/datasets/{id}/scores", get(scores))
        .route("/api/datasets/{id}/graph", get(graph))
        .route("/api/datasets/{id}/evaluate", post(evaluate))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/jobs/{id}/report", get(job_report))
        .layer(DefaultBodyLimit::max(limit))
        .layer(CorsLayer::permissive())
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { "famex API; see /api/health" })),
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await?;
    Ok(())
}

fn json_response(body: Arc<String>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body.as_str().to_owned()).into_response()
}

fn dataset_summary(id: &str, d: &Dataset) -> Value {
    let counts = d.class_counts();
    json!({
        "id": id,
        "name": d.name,
        "features": d.feature_names,
        "rows": d.n_rows(),
        "dropped_rows": d.dropped_rows,
        "classes": d.classes.iter().zip(counts).map(|(c, n)| json!({"name": c, "count": n})).collect::<Vec<_>>(),
    })
}

async fn upload(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    state.evict_idle();
    if body.is_empty() {
        return Err(ApiError::bad_request("empty upload"));
    }
    let class_col = query.get("class_col").map(String::as_str).unwrap_or("last");
    let name = query.get("name").map(String::as_str).unwrap_or("dataset");
    let class_column: ClassColumn = class_col.parse().map_err(ApiError::bad_request)?;
    let id = hex_digest(&[name.as_bytes(), class_col.as_bytes(), &body]);

    let existing = state.0.sessions.lock().unwrap().get(&id).cloned();
    let session = match existing {
        Some(s) => s,
        None => {
            let opts = LoadOptions {
                class_column,
                ..LoadOptions::default()
            };
            let name_owned = name.to_string();
            let dataset = tokio::task::spawn_blocking(move || parse_csv(&body, &name_owned, &opts))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
                .map_err(ApiError::bad_request)?;
            let s = Arc::new(Session {
                dataset: Arc::new(dataset),
                last_used: Mutex::new(Instant::now()),
                scores: Mutex::new(HashMap::new()),
                graphs: Mutex::new(HashMap::new()),
            });
            state
                .0
                .sessions
                .lock()
                .unwrap()
                .entry(id.clone())
                .or_insert(s)
                .clone()
        }
    };
    *session.last_used.lock().unwrap() = Instant::now();
    Ok(Json(dataset_summary(&id, &session.dataset)))
}

async fn summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = state.session(&id)?;
    Ok(Json(dataset_summary(&id, &s.dataset)))
}

fn parse_decimals(s: &str) -> Result<Option<u32>, ApiError> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| ApiError::unprocessable(format!("corr_decimals must be a number or 'none', got '{s}'")))
}

fn famex_params(query: &HashMap<String, String>) -> Result<FamexConfig, ApiError> {
    let mut config = FamexConfig::default();
    for (k, v) in query {
        match k.as_str() {
            "bins" => {
                config.bins = v
                    .parse()
                    .ok()
                    .filter(|&b| b >= 1)
                    .ok_or_else(|| ApiError::unprocessable(format!("bins must be a positive integer, got '{v}'")))?
            }
            "thresholds" => config.fam.thresholds = v.parse::<Thresholds>().map_err(ApiError::unprocessable)?,
            "corr_decimals" => config.fam.correlation_decimals = parse_decimals(v)?,
            other => return Err(ApiError::unprocessable(format!("unknown parameter '{other}'"))),
        }
    }
    Ok(config)
}

fn cache_key(c: &FamexConfig) -> String {
    format!(
        "{}|{}|{}|{:?}",
        c.bins, c.fam.thresholds.low, c.fam.thresholds.high, c.fam.correlation_decimals
    )
}

async fn cached<F>(map: &Mutex<HashMap<String, Cached>>, key: String, compute: F) -> Result<Arc<String>, ApiError>
where
    F: FnOnce() -> Result<String, Error> + Send + 'static,
{
    let cell = map.lock().unwrap().entry(key).or_default().clone();
    cell.get_or_init(|| async move {
        match tokio::task::spawn_blocking(compute).await {
            Ok(Ok(s)) => Ok(Arc::new(s)),
            Ok(Err(e)) => Err(ApiError::unprocessable(e)),
            Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        }
    })
    .await
    .clone()
}

async fn scores(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let config = famex_params(&query)?;
    let dataset = s.dataset.clone();
    let body = cached(&s.scores, cache_key(&config), move || {
        let graph = build_fam_graph(&dataset, &config.fam)?;
        famex_with_graph(&dataset, &graph, config.bins)?.to_json()
    })
    .await?;
    Ok(json_response(body))
}

async fn graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let config = famex_params(&query)?;
    let fam: FamOptions = config.fam;
    let dataset = s.dataset.clone();
    let body = cached(&s.graphs, cache_key(&config), move || {
        export_graph(&build_fam_graph(&dataset, &fam)?, GraphFormat::Json)
    })
    .await?;
    Ok(json_response(body))
}

/// Evaluation parameters; every field is optional and defaults to the CLI default.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvaluateRequest {
    methods: Option<Vec<String>>,
    classifiers: Option<Vec<String>>,
    top: Option<f64>,
    bottom: Option<f64>,
    folds: Option<usize>,
    iters: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
    thresholds: Option<String>,
    corr_decimals: Option<Value>,
    explainer: Option<String>,
    repeats: Option<usize>,
    permutations: Option<usize>,
    /// kind → key → value, e.g. `{"svm": {"epochs": 200}}`.
    params: BTreeMap<String, BTreeMap<String, Value>>,
}

impl EvaluateRequest {
    fn config(self) -> Result<ExperimentConfig, ApiError> {
        let d = ExperimentConfig::default();
        let seed = self.seed.unwrap_or(d.seed);
        let methods = match self.methods {
            Some(m) => m
                .iter()
                .map(|s| s.parse::<Method>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(ApiError::unprocessable)?,
            None => d.methods.clone(),
        };
        let kinds = match self.classifiers {
            Some(c) => c
                .iter()
                .map(|s| s.parse::<ClassifierKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(ApiError::unprocessable)?,
            None => ClassifierKind::ALL.to_vec(),
        };
        let mut classifiers: Vec<ClassifierSpec> = Vec::new();
        for kind in kinds {
            if classifiers.iter().all(|c| c.kind() != kind) {
                classifiers.push(ClassifierSpec::new(kind, seed));
            }
        }
        let explainer_kind = match self.explainer {
            Some(e) => e.parse::<ClassifierKind>().map_err(ApiError::unprocessable)?,
            None => d.explainer.kind(),
        };
        let mut explainer = ClassifierSpec::new(explainer_kind, seed);
        for (kind, values) in &self.params {
            let kind: ClassifierKind = kind.parse().map_err(ApiError::unprocessable)?;
            for (key, value) in values {
                let value = match value {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                for spec in classifiers.iter_mut().chain(std::iter::once(&mut explainer)) {
                    if spec.kind() == kind {
                        spec.set(key, &value).map_err(ApiError::unprocessable)?;
                    }
                }
            }
        }
        let mut famex = FamexConfig::default();
        if let Some(b) = self.bins {
            famex.bins = b;
        }
        if let Some(t) = &self.thresholds {
            famex.fam.thresholds = t.parse().map_err(ApiError::unprocessable)?;
        }
        match self.corr_decimals {
            None => {}
            Some(Value::Null) => famex.fam.correlation_decimals = None,
            Some(Value::String(s)) => famex.fam.correlation_decimals = parse_decimals(&s)?,
            Some(Value::Number(n)) => {
                famex.fam.correlation_decimals = Some(
                    n.as_u64()
                        .and_then(|v| u32::try_from(v).ok())
                        .ok_or_else(|| ApiError::unprocessable("corr_decimals must be a non-negative integer"))?,
                )
            }
            Some(_) => return Err(ApiError::unprocessable("corr_decimals must be a number or 'none'")),
        }
        let config = ExperimentConfig {
            methods,
            classifiers,
            top_fraction: self.top.unwrap_or(d.top_fraction),
            bottom_fraction: self.bottom.unwrap_or(d.bottom_fraction),
            folds: self.folds.unwrap_or(d.folds),
            iterations: self.iters.unwrap_or(d.iterations),
            seed,
            famex,
            explainer,
            repeats: self.repeats.unwrap_or(d.repeats),
            permutations: self.permutations.unwrap_or(d.permutations),
            subsets: d.subsets.clone(),
        };
        config.validate().map_err(ApiError::unprocessable)?;
        Ok(config)
    }
}

fn start_job(state: &AppState, id: String, dataset: Arc<Dataset>, config: ExperimentConfig) -> Arc<Job> {
    let mut jobs = state.0.jobs.lock().unwrap();
    if let Some(job) = jobs.get(&id) {
        *job.last_used.lock().unwrap() = Instant::now();
        return job.clone();
    }
    let job = Arc::new(Job {
        id: id.clone(),
        status: Mutex::new(JobStatus::Queued),
        progress: Mutex::new(Progress { completed: 0, total: 0 }),
        result: OnceLock::new(),
        done: watch::channel(false).0,
        last_used: Mutex::new(Instant::now()),
    });
    jobs.insert(id, job.clone());
    drop(jobs);

    let workers = state.0.workers.clone();
    let running = job.clone();
    tokio::spawn(async move {
        let _permit = workers.acquire_owned().await;
        *running.status.lock().unwrap() = JobStatus::Running;
        let progress_job = running.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let report = run_experiment_with_progress(&[(*dataset).clone()], &config, |p| {
                *progress_job.progress.lock().unwrap() = p;
            })?;
            render_report(&report, ReportFormat::Json)
        })
        .await;
        let result = match outcome {
            Ok(Ok(text)) => Ok(Arc::new(text)),
            Ok(Err(e)) => Err(ApiError::unprocessable(e)),
            Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        };
        *running.status.lock().unwrap() = if result.is_ok() { JobStatus::Done } else { JobStatus::Failed };
        let _ = running.result.set(result);
        *running.last_used.lock().unwrap() = Instant::now();
        running.done.send_replace(true);
    });
    job
}

async fn evaluate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let request: EvaluateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        EvaluateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(ApiError::unprocessable)?
    };
    let config = request.config()?;
    let config_json = serde_json::to_string(&config).map_err(ApiError::unprocessable)?;
    let job_id = hex_digest(&[id.as_bytes(), config_json.as_bytes()]);
    let job = start_job(&state, job_id, session.dataset.clone(), config);

    let wait = query.get("wait").is_some_and(|w| w == "true" || w == "1");
    if wait {
        let report = job.wait().await?;
        return Ok(json_response(report));
    }
    let mut v = job.snapshot();
    v["status_url"] = Value::String(format!("/api/jobs/{}", job.id));
    Ok((StatusCode::ACCEPTED, Json(v)).into_response())
}

fn find_job(state: &AppState, id: &str) -> Result<Arc<Job>, ApiError> {
    state.evict_idle();
    let job = state
        .0
        .jobs
        .lock()
        .unwrap()
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("job", id))?;
    *job.last_used.lock().unwrap() = Instant::now();
    Ok(job)
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(find_job(&state, &id)?.snapshot()))
}

async fn job_report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = find_job(&state, &id)?;
    match job.result.get() {
        Some(Ok(report)) => Ok(json_response(report.clone())),
        Some(Err(e)) => Err(e.clone()),
        None => Err(ApiError::new(StatusCode::CONFLICT, "job has not finished")),
    }
}
