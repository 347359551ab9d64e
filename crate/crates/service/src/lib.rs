//! HTTP API for creating, stepping and steering runs.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/runs` | create a run from a run configuration |
//! | GET | `/runs/{id}` | status |
//! | POST | `/runs/{id}/step` | advance `generations` iterations |
//! | POST | `/runs/{id}/preferences` | queue a cell weight |
//! | GET | `/runs/{id}/archive?ax=i,j` | expressivity report, optional heatmap |
//! | GET | `/runs/{id}/individuals/{iid}` | genome, evaluation, lineage |
//! | GET | `/runs/{id}/metrics` | per-iteration metrics |
//!
//! Errors are `{"error": {"code", "message"}}`. Preference updates are queued
//! and applied before the next iteration starts.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, PoisonError};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use illuminate::analysis::heatmap_export;
use illuminate::engines::{ConfigIssue, EngineError, StopReason};
use illuminate::{Algorithm, CellIndex, RunConfig, SteerableRun};

/// Most iterations one step request may ask for.
pub const MAX_GENERATIONS_PER_REQUEST: u64 = 10_000;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    issues: Vec<ConfigIssue>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            issues: Vec::new(),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let code = if r.status() == StatusCode::UNPROCESSABLE_ENTITY {
            "validation"
        } else {
            "bad_request"
        };
        Self::new(r.status(), code, r.body_text())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidConfig(issues) => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "validation",
                message: "invalid run configuration".into(),
                issues,
            },
            EngineError::Unsupported(_) => Self::new(StatusCode::BAD_REQUEST, "unsupported", e.to_string()),
            EngineError::InvalidPreference(_) => Self::validation(e.to_string()),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "run_failed", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if !self.issues.is_empty() {
            error["issues"] = json!(self.issues);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct RunSlot {
    run: Mutex<Box<dyn SteerableRun>>,
    pending: Mutex<Vec<(CellIndex, f64)>>,
    stepping: AtomicBool,
    algorithm: Algorithm,
    domain: &'static str,
    /// Grid resolutions of map-based runs; `None` means steering is not
    /// supported.
    map_resolutions: Option<Vec<usize>>,
}

impl RunSlot {
    fn lock(&self) -> std::sync::MutexGuard<'_, Box<dyn SteerableRun>> {
        self.run.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

#[derive(Default)]
pub struct AppState {
    runs: Mutex<BTreeMap<u64, Arc<RunSlot>>>,
    next_id: AtomicU64,
}

impl AppState {
    fn slot(&self, id: u64) -> ApiResult<Arc<RunSlot>> {
        self.runs
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no run {id}")))
    }
}

pub fn router() -> Router {
    router_with(Arc::new(AppState::default()))
}

pub fn router_with(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/runs", post(create_run))
        .route("/runs/{id}", get(run_status))
        .route("/runs/{id}/step", post(step_run))
        .route("/runs/{id}/preferences", post(set_preference))
        .route("/runs/{id}/archive", get(archive))
        .route("/runs/{id}/individuals/{iid}", get(individual))
        .route("/runs/{id}/metrics", get(metrics))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}

/// Runs `f` on the blocking pool with the run locked.
async fn with_run<T, F>(slot: Arc<RunSlot>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut dyn SteerableRun) -> T + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(slot.lock().as_mut()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

#[derive(Serialize)]
struct RunStatus {
    id: u64,
    algorithm: Algorithm,
    domain: &'static str,
    iteration: u64,
    evaluations: u64,
    stop_reason: Option<StopReason>,
    coverage: f64,
    qd_score: f64,
    filled_cells: usize,
    steerable: bool,
}

fn status_of(id: u64, slot: &RunSlot, run: &dyn SteerableRun) -> RunStatus {
    let report = run.report();
    RunStatus {
        id,
        algorithm: slot.algorithm,
        domain: slot.domain,
        iteration: run.iteration(),
        evaluations: run.evaluations(),
        stop_reason: run.stop_reason(),
        coverage: report.coverage,
        qd_score: report.qd_score,
        filled_cells: report.filled_cells,
        steerable: slot.map_resolutions.is_some(),
    }
}

async fn create_run(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RunConfig>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<RunStatus>)> {
    let Json(config) = body?;
    let run = tokio::task::spawn_blocking(move || config.build())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let algorithm = run.algorithm();
    let map_resolutions = algorithm.is_map_based().then(|| run.report().resolutions);
    let slot = Arc::new(RunSlot {
        domain: run.domain_name(),
        run: Mutex::new(run),
        pending: Mutex::new(Vec::new()),
        stepping: AtomicBool::new(false),
        algorithm,
        map_resolutions,
    });
    let id = state.next_id.fetch_add(1, Ordering::SeqCst);
    state
        .runs
        .lock()
        .unwrap_or_else(PoisonError::into_inner)
        .insert(id, slot.clone());
    let status = with_run(slot.clone(), move |run| status_of(id, &slot, run)).await?;
    Ok((StatusCode::CREATED, Json(status)))
}

async fn run_status(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<RunStatus>> {
    let slot = state.slot(id)?;
    let s = slot.clone();
    Ok(Json(with_run(slot, move |run| status_of(id, &s, run)).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRequest {
    #[serde(default = "one")]
    generations: u64,
}

fn one() -> u64 {
    1
}

#[derive(Serialize)]
struct StepResponse {
    steps_run: u64,
    preferences_applied: usize,
    #[serde(flatten)]
    status: RunStatus,
}

/// Clears the stepping flag however the step request ends.
struct SteppingGuard(Arc<RunSlot>);

impl Drop for SteppingGuard {
    fn drop(&mut self) {
        self.0.stepping.store(false, Ordering::SeqCst);
    }
}

async fn step_run(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> ApiResult<Json<StepResponse>> {
    let Json(req) = body?;
    if req.generations > MAX_GENERATIONS_PER_REQUEST {
        return Err(ApiError::validation(format!(
            "generations must not exceed {MAX_GENERATIONS_PER_REQUEST}"
        )));
    }
    let slot = state.slot(id)?;
    if slot.stepping.swap(true, Ordering::SeqCst) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("run {id} is already stepping"),
        ));
    }
    let guard = SteppingGuard(slot.clone());
    let result = tokio::task::spawn_blocking(move || -> ApiResult<StepResponse> {
        let slot = guard.0.clone();
        let mut steps_run = 0;
        let mut preferences_applied = 0;
        for _ in 0..req.generations {
            let mut run = slot.lock();
            if run.stop_reason().is_some() {
                break;
            }
            // iteration boundary: queued preferences take effect now
            let queued = std::mem::take(&mut *slot.pending.lock().unwrap_or_else(PoisonError::into_inner));
            for (cell, weight) in queued {
                run.set_preference(cell, weight)?;
                preferences_applied += 1;
            }
            if !run.step()? {
                break;
            }
            steps_run += 1;
        }
        let run = slot.lock();
        if req.generations > 0 && steps_run == 0 && run.stop_reason().is_some() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                format!("run {id} has finished"),
            ));
        }
        let status = status_of(id, &slot, run.as_ref());
        drop(guard);
        Ok(StepResponse {
            steps_run,
            preferences_applied,
            status,
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(result))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferenceRequest {
    cell: Vec<usize>,
    weight: f64,
}

async fn set_preference(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Result<Json<PreferenceRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body?;
    let slot = state.slot(id)?;
    let Some(resolutions) = &slot.map_resolutions else {
        return Err(EngineError::Unsupported(slot.algorithm).into());
    };
    if !req.weight.is_finite() || req.weight < 1.0 {
        return Err(ApiError::validation(format!(
            "weight {} must be finite and at least 1",
            req.weight
        )));
    }
    let cell = CellIndex(req.cell);
    if !cell.is_within(resolutions) {
        return Err(ApiError::validation(format!(
            "cell {cell} outside a grid of {resolutions:?}"
        )));
    }
    let mut pending = slot.pending.lock().unwrap_or_else(PoisonError::into_inner);
    pending.push((cell.clone(), req.weight));
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "queued": pending.len(), "cell": cell, "weight": req.weight })),
    ))
}

#[derive(Deserialize)]
struct ArchiveQuery {
    ax: Option<String>,
}

fn parse_axes(ax: &str) -> ApiResult<(usize, usize)> {
    let parts: Vec<&str> = ax.split(',').collect();
    let parsed: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse::<usize>()).collect();
    match parsed.as_deref() {
        Ok([a, b]) => Ok((*a, *b)),
        _ => Err(ApiError::validation(format!(
            "ax must be two comma-separated axis indices, got {ax:?}"
        ))),
    }
}

async fn archive(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    Query(q): Query<ArchiveQuery>,
) -> ApiResult<Json<Value>> {
    let axes = q.ax.as_deref().map(parse_axes).transpose()?;
    let slot = state.slot(id)?;
    let report = with_run(slot, |run| run.report()).await?;
    let mut body = json!({ "report": report });
    if let Some((a, b)) = axes {
        let heatmap = heatmap_export(&report, a, b).map_err(|e| ApiError::validation(e.to_string()))?;
        body["heatmap"] = json!(heatmap);
    }
    Ok(Json(body))
}

async fn individual(
    State(state): State<Arc<AppState>>,
    Path((id, iid)): Path<(u64, u64)>,
) -> ApiResult<Json<Value>> {
    let slot = state.slot(id)?;
    let view = with_run(slot, move |run| run.individual(iid)).await?;
    view.map(|v| Json(json!(v)))
        .ok_or_else(|| ApiError::not_found(format!("no individual {iid} in run {id}")))
}

async fn metrics(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let slot = state.slot(id)?;
    let body = with_run(slot, |run| {
        json!({
            "metrics": run.metrics(),
            "selection_counts": run
                .selection_counts()
                .iter()
                .map(|(c, n)| json!({ "cell": c, "count": n }))
                .collect::<Vec<_>>(),
            "preferences": run
                .preferences()
                .iter()
                .map(|(c, w)| json!({ "cell": c, "weight": w }))
                .collect::<Vec<_>>(),
        })
    })
    .await?;
    Ok(Json(body))
}
