//! HTTP API over the store and job queue.

use std::sync::Arc;

use acouforge_core::design::from_document;
use acouforge_core::modal::Material;
use acouforge_core::optimize::{SearchConfig, TargetSpec};
use acouforge_core::FilterDesign;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::jobs::{JobQueue, JobState};
use crate::ops::{self, ModeSummary, ModelRequest, SpectrumRequest, StlRequest, SynthRequest};
use crate::store::{Store, StoredDesign};

/// Voxel grids for modal models can be large.
const BODY_LIMIT: usize = 64 << 20;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub jobs: Arc<JobQueue>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        let store = Arc::new(store);
        let jobs = Arc::new(JobQueue::start(Arc::clone(&store)));
        Self { store, jobs }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/designs", post(create_design))
        .route("/designs/{id}", get(get_design).put(put_design))
        .route("/designs/{id}/spectrum", post(design_spectrum))
        .route("/designs/{id}/stl", post(design_stl))
        .route("/jobs/optimize", post(submit_optimize))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/result", get(get_job_result))
        .route("/modal/models", post(create_model))
        .route("/modal/models/{id}/retune", post(retune_model))
        .route("/modal/models/{id}/synthesize", post(synthesize_model))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    Ok(from_document(body)?)
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn storage(e: anyhow::Error) -> ApiError {
    ApiError::internal(format!("{e:#}"))
}

fn design_or_404(state: &AppState, id: &str) -> Result<StoredDesign, ApiError> {
    state
        .store
        .design(id)
        .ok_or_else(|| ApiError::not_found("design", id))
}

fn parse_design(body: &str) -> Result<FilterDesign, ApiError> {
    let design: FilterDesign = parse(body)?;
    let v = design.validate();
    if !v.is_empty() {
        return Err(ApiError::invalid(v));
    }
    Ok(design)
}

#[derive(Serialize)]
struct DesignRef {
    id: String,
    revision: String,
}

impl From<StoredDesign> for DesignRef {
    fn from(s: StoredDesign) -> Self {
        Self {
            id: s.id,
            revision: s.revision,
        }
    }
}

fn with_revision(mut r: Response, revision: &str) -> Response {
    if let Ok(v) = HeaderValue::from_str(revision) {
        r.headers_mut().insert("x-design-revision", v);
    }
    r
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_design(
    State(state): State<AppState>,
    body: String,
) -> Result<impl IntoResponse, ApiError> {
    let design = parse_design(&body)?;
    let stored = state.store.create_design(&design).map_err(storage)?;
    Ok((StatusCode::CREATED, Json(DesignRef::from(stored))))
}

async fn get_design(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = design_or_404(&state, &id)?;
    let r = ([(header::CONTENT_TYPE, "application/json")], s.text).into_response();
    Ok(with_revision(r, &s.revision))
}

async fn put_design(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<DesignRef>, ApiError> {
    design_or_404(&state, &id)?;
    let design = parse_design(&body)?;
    let stored = state.store.replace_design(&id, &design).map_err(storage)?;
    stored
        .map(|s| Json(s.into()))
        .ok_or_else(|| ApiError::not_found("design", &id))
}

async fn design_spectrum(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Response, ApiError> {
    let s = design_or_404(&state, &id)?;
    let req: SpectrumRequest = if body.trim().is_empty() {
        SpectrumRequest::default()
    } else {
        parse(&body)?
    };
    let design = s.design;
    let csv = blocking(move || Ok(ops::spectrum(&design, &req)?)).await?;
    let r = ([(header::CONTENT_TYPE, "text/csv")], csv).into_response();
    Ok(with_revision(r, &s.revision))
}

async fn design_stl(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Response, ApiError> {
    let s = design_or_404(&state, &id)?;
    let req: StlRequest = if body.trim().is_empty() {
        StlRequest::default()
    } else {
        parse(&body)?
    };
    let design = s.design;
    let bytes = blocking(move || {
        ops::stl(&design, &req).map_err(|e| ApiError::unprocessable(format!("{e:#}")))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "model/stl")], bytes).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeRequest {
    design_id: String,
    target: TargetSpec,
    #[serde(default)]
    config: SearchConfig,
}

async fn submit_optimize(
    State(state): State<AppState>,
    body: String,
) -> Result<impl IntoResponse, ApiError> {
    let req: OptimizeRequest = parse(&body)?;
    let design = design_or_404(&state, &req.design_id)?.design;
    req.config.check()?;
    req.target.check(&req.config.grid)?;
    let job = state.jobs.submit(design, req.target, req.config);
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "job_id": job.id, "state": job.state })),
    ))
}

async fn get_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    state
        .jobs
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found("job", &id))
}

async fn get_job_result(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let job = state
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found("job", &id))?;
    match (job.state, job.result) {
        (JobState::Done, Some(result)) => Ok(Json(result).into_response()),
        (JobState::Failed, _) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "JOB_FAILED",
            job.error.unwrap_or_else(|| "job failed".into()),
        )),
        (state, _) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "JOB_NOT_DONE",
            format!("job {id} is {state:?}"),
        )),
    }
}

async fn create_model(
    State(state): State<AppState>,
    body: String,
) -> Result<impl IntoResponse, ApiError> {
    let req: ModelRequest = parse(&body)?;
    let model = blocking(move || Ok(ops::build_model(&req)?)).await?;
    let id = state.store.create_model(&model).map_err(storage)?;
    let mut summary = serde_json::to_value(ModeSummary::from(&model))
        .map_err(|e| ApiError::internal(e.to_string()))?;
    summary["id"] = json!(id);
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn retune_model(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<ModeSummary>, ApiError> {
    let model = state
        .store
        .model(&id)
        .ok_or_else(|| ApiError::not_found("model", &id))?;
    let material: Material = parse(&body)?;
    Ok(Json(ModeSummary::from(&model.retune(&material)?)))
}

async fn synthesize_model(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Response, ApiError> {
    let model = state
        .store
        .model(&id)
        .ok_or_else(|| ApiError::not_found("model", &id))?;
    let req: SynthRequest = parse(&body)?;
    let out = blocking(move || Ok(ops::synth(&model, &req)?)).await?;
    let mut r = ([(header::CONTENT_TYPE, "audio/wav")], out.wav).into_response();
    if let Ok(v) = HeaderValue::from_str(&out.gain.to_string()) {
        r.headers_mut().insert("x-normalization-gain", v);
    }
    if out.silent {
        r.headers_mut()
            .insert("x-silent-model", HeaderValue::from_static("true"));
    }
    Ok(r)
}
