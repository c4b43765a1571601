//! Single-session HTTP API backing the browser viewer.
//!
//! The session holds one scene, the current selection and the combine
//! operands applied on top of it. Every state change bumps `revision`;
//! requests that carry an older revision are refused with 409. Field builds
//! and selections run on the blocking pool, so the lock is only held to read
//! or publish state.

use std::net::{Ipv4Addr, SocketAddr};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use metacast_core::data::io::{self, SelectionFile};
use metacast_core::techniques::{baseline_brush, combine, CombineMode, Flag, SampleRecord, StrokeSample};
use metacast_core::{Error, Scene, SmoothingConfig, Stroke, Technique};
use parking_lot::RwLock;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::pipeline::{self, Outcome};

pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    Malformed(String),
    #[error("{0}")]
    NotFound(String),
    #[error("stale revision {given}, current is {current}")]
    Stale { given: u64, current: u64 },
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::Malformed(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Stale { .. } => StatusCode::CONFLICT,
            ApiError::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => ApiError::Malformed(e.to_string()),
            Error::InvalidInput(_) | Error::OutOfDomain(_) => ApiError::Domain(e.to_string()),
            Error::Io(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::Stale { current, .. } = self {
            body["revision"] = json!(current);
        }
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default)]
struct BuildProgress {
    done: AtomicUsize,
    total: AtomicUsize,
}

#[derive(Debug)]
enum BuildState {
    Running,
    Ready,
    Failed(String),
}

#[derive(Debug)]
struct Build {
    token: u64,
    progress: Arc<BuildProgress>,
    state: BuildState,
}

#[derive(Debug, Clone)]
struct Current {
    base: Outcome,
    operands: Vec<(CombineMode, Vec<usize>)>,
    record: SelectionFile,
}

impl Current {
    fn new(base: Outcome) -> Self {
        let record = base.record.clone();
        Self {
            base,
            operands: Vec::new(),
            record,
        }
    }

    fn reapply(&mut self) {
        let mut particles = self.base.record.particles.clone();
        for (mode, operand) in &self.operands {
            particles = combine(&particles, operand, *mode);
        }
        self.record = self.base.record.clone();
        self.record.particles = particles;
    }
}

#[derive(Debug, Default)]
struct Session {
    revision: u64,
    next_token: u64,
    scene: Option<Arc<Scene>>,
    build: Option<Build>,
    current: Option<Current>,
}

impl Session {
    fn check_revision(&self, given: Option<u64>) -> ApiResult<()> {
        match given {
            Some(given) if given != self.revision => Err(ApiError::Stale {
                given,
                current: self.revision,
            }),
            _ => Ok(()),
        }
    }

    fn scene(&self) -> ApiResult<Arc<Scene>> {
        self.scene
            .clone()
            .ok_or_else(|| ApiError::NotFound("no cloud loaded".into()))
    }
}

/// Shared service state.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    session: Arc<RwLock<Session>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin: &HeaderValue, _| {
            is_local_origin(origin)
        }))
        .allow_methods([Method::GET, Method::POST, Method::PATCH])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/api/status", get(status))
        .route("/api/cloud", post(upload_cloud))
        .route("/api/cloud/points", get(points))
        .route("/api/select", post(select))
        .route("/api/selection", get(selection_file))
        .route("/api/threshold", patch(threshold))
        .route("/api/combine", post(combine_operand))
        .route("/api/mesh", get(mesh))
        .layer(cors)
        .with_state(state)
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(origin) = origin.to_str() else {
        return false;
    };
    let rest = origin
        .strip_prefix("http://")
        .or_else(|| origin.strip_prefix("https://"))
        .unwrap_or("");
    let host = rest.rsplit_once(':').map_or(rest, |(h, _)| h);
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

/// Blocks on a multi-threaded runtime serving `127.0.0.1:port`.
pub fn serve(port: u16) -> metacast_core::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on http://{addr}");
        axum::serve(listener, router(AppState::new())).await
    })?;
    Ok(())
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::Malformed(format!("request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

fn flag_list(flags: &[Flag]) -> Value {
    flags
        .iter()
        .map(|f| json!({ "flag": f, "message": f.describe() }))
        .collect()
}

fn summary(revision: u64, current: &Current) -> Value {
    let record = &current.record;
    let triangles = current.base.selection.as_ref().map_or(0, |s| s.mesh.triangles.len());
    json!({
        "revision": revision,
        "technique": record.technique,
        "rho0": record.rho0,
        "s": record.s,
        "threshold": record.threshold,
        "kept_components": record.kept_components,
        "count": record.particles.len(),
        "particles": record.particles,
        "combined": current.operands.len(),
        "flags": flag_list(&record.flags),
        "triangles": triangles,
        "mesh": "/api/mesh",
    })
}

async fn status(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let session = state.session.read();
    if session.scene.is_none() && session.build.is_none() {
        return Err(ApiError::NotFound("empty session: upload a cloud first".into()));
    }
    let build = session.build.as_ref().map(|b| {
        let (name, error) = match &b.state {
            BuildState::Running => ("running", None),
            BuildState::Ready => ("ready", None),
            BuildState::Failed(e) => ("failed", Some(e.clone())),
        };
        json!({
            "token": b.token,
            "state": name,
            "done": b.progress.done.load(Ordering::Relaxed),
            "total": b.progress.total.load(Ordering::Relaxed),
            "error": error,
        })
    });
    let cloud = session.scene.as_ref().map(|scene| {
        let spec = scene.field().spec();
        let (lo, hi) = (spec.box_min(), spec.box_max());
        json!({
            "particles": scene.cloud().len(),
            "labeled": scene.cloud().labels().is_some(),
            "dims": spec.dims(),
            "box_min": [lo.x, lo.y, lo.z],
            "box_max": [hi.x, hi.y, hi.z],
            "default_radius": scene.default_radius(),
        })
    });
    let selection = session.current.as_ref().map(|c| summary(session.revision, c));
    Ok(Json(json!({
        "revision": session.revision,
        "build": build,
        "cloud": cloud,
        "selection": selection,
    })))
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    grid: Option<usize>,
}

async fn upload_cloud(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let grid = query.grid.unwrap_or(DEFAULT_GRID);
    if grid < 2 {
        return Err(ApiError::Domain("grid needs at least 2 nodes per axis".into()));
    }
    let cloud = io::parse_cloud_bytes(&body)?;
    if cloud.is_empty() {
        return Err(ApiError::Domain("cloud has no particles".into()));
    }
    let progress = Arc::new(BuildProgress::default());
    let (token, revision) = {
        let mut session = state.session.write();
        session.next_token += 1;
        session.revision += 1;
        let token = session.next_token;
        session.build = Some(Build {
            token,
            progress: progress.clone(),
            state: BuildState::Running,
        });
        (token, session.revision)
    };

    let shared = state.session.clone();
    tokio::task::spawn_blocking(move || {
        let built = Scene::build_with_progress(cloud, [grid; 3], &SmoothingConfig::default(), &|done, total| {
            progress.total.store(total, Ordering::Relaxed);
            progress.done.store(done, Ordering::Relaxed);
        });
        let mut session = shared.write();
        let Some(build) = session.build.as_mut().filter(|b| b.token == token) else {
            return;
        };
        match built {
            Ok(scene) => {
                build.state = BuildState::Ready;
                session.scene = Some(Arc::new(scene));
                session.current = None;
            }
            Err(e) => build.state = BuildState::Failed(e.to_string()),
        }
        session.revision += 1;
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "token": token, "revision": revision, "status": "/api/status" })),
    ))
}

#[derive(Debug, Deserialize)]
struct PointsQuery {
    decimate: Option<usize>,
}

async fn points(State(state): State<AppState>, Query(query): Query<PointsQuery>) -> ApiResult<Json<Value>> {
    let stride = query.decimate.unwrap_or(1);
    if stride == 0 {
        return Err(ApiError::Malformed("decimate must be at least 1".into()));
    }
    let (scene, revision) = {
        let session = state.session.read();
        (session.scene()?, session.revision)
    };
    let cloud = scene.cloud();
    let positions: Vec<[f64; 3]> = cloud
        .positions()
        .iter()
        .step_by(stride)
        .map(|p| [p.x, p.y, p.z])
        .collect();
    let labels: Option<Vec<bool>> = cloud.labels().map(|l| l.iter().step_by(stride).copied().collect());
    Ok(Json(json!({
        "revision": revision,
        "decimate": stride,
        "total": cloud.len(),
        "positions": positions,
        "labels": labels,
    })))
}

/// Stroke part of a request. Accepts a whole stroke file; its technique and
/// mode fields are ignored.
#[derive(Debug, Deserialize)]
struct StrokeBody {
    radius: Option<f64>,
    samples: Vec<SampleRecord>,
}

impl StrokeBody {
    fn to_stroke(&self, scene: &Scene) -> ApiResult<Stroke> {
        let samples = self
            .samples
            .iter()
            .map(|s| StrokeSample {
                position: metacast_core::Vec3::new(s.x, s.y, s.z),
                t: s.t,
            })
            .collect();
        Ok(Stroke::new(
            samples,
            self.radius.unwrap_or_else(|| scene.default_radius()),
        )?)
    }
}

#[derive(Debug, Deserialize)]
struct SelectRequest {
    technique: Technique,
    stroke: StrokeBody,
    s: Option<f64>,
    revision: Option<u64>,
}

/// Reads the scene at a known revision, runs `work` off the async threads and
/// publishes the result if nothing changed in the meantime.
async fn update<F>(state: &AppState, given: Option<u64>, work: F) -> ApiResult<Json<Value>>
where
    F: FnOnce(&Scene, Option<Current>) -> ApiResult<Current> + Send + 'static,
{
    let (scene, current, revision) = {
        let session = state.session.read();
        session.check_revision(given)?;
        (session.scene()?, session.current.clone(), session.revision)
    };
    let worker_scene = scene.clone();
    let next = blocking(move || work(&worker_scene, current)).await?;
    let mut session = state.session.write();
    if session.revision != revision {
        return Err(ApiError::Stale {
            given: revision,
            current: session.revision,
        });
    }
    session.revision += 1;
    let body = summary(session.revision, &next);
    session.current = Some(next);
    Ok(Json(body))
}

async fn select(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let request: SelectRequest = parse_body(&body)?;
    update(&state, request.revision, move |scene, _| {
        let stroke = request.stroke.to_stroke(scene)?;
        let outcome = pipeline::select(scene, request.technique, &stroke, request.s)?;
        Ok(Current::new(outcome))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct ThresholdRequest {
    s: f64,
    revision: Option<u64>,
}

async fn threshold(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let request: ThresholdRequest = parse_body(&body)?;
    update(&state, request.revision, move |scene, current| {
        let mut current = current.ok_or_else(|| ApiError::NotFound("no selection yet".into()))?;
        let selection = current
            .base
            .selection
            .as_ref()
            .ok_or_else(|| ApiError::Domain("baseline selections have no threshold".into()))?;
        current.base = pipeline::adjust(scene, selection, request.s)?;
        current.reapply();
        Ok(current)
    })
    .await
}

#[derive(Debug, Deserialize)]
struct CombineRequest {
    #[serde(default)]
    mode: CombineMode,
    stroke: StrokeBody,
    revision: Option<u64>,
}

async fn combine_operand(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let request: CombineRequest = parse_body(&body)?;
    update(&state, request.revision, move |scene, current| {
        let mut current = current.ok_or_else(|| ApiError::NotFound("no selection to combine with".into()))?;
        let stroke = request.stroke.to_stroke(scene)?;
        current
            .operands
            .push((request.mode, baseline_brush(scene.cloud(), &stroke)));
        current.reapply();
        Ok(current)
    })
    .await
}

fn current(state: &AppState) -> ApiResult<Current> {
    state
        .session
        .read()
        .current
        .clone()
        .ok_or_else(|| ApiError::NotFound("no selection yet".into()))
}

/// The current selection in the exact form `metacast select` writes.
async fn selection_file(State(state): State<AppState>) -> ApiResult<Response> {
    let body = current(&state)?.record.to_json();
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn mesh(State(state): State<AppState>) -> ApiResult<Response> {
    let obj = current(&state)?.base.mesh_obj();
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], obj).into_response())
}
