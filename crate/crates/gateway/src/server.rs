//! HTTP session server. One shared immutable bundle; each session owns an
//! episode behind its own lock.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::de::DeserializeOwned;

use navsim_core::bundle::{load_screen_png, EnvBundle, SCHEMA_VERSION};
use navsim_core::episode::{EpisodeConfig, EpisodeState, Observation, DEFAULT_MAX_ROUNDS};
use navsim_core::graph::NodeId;
use navsim_core::raster::RENDERER_VERSION;
use navsim_core::tasks::TaskSpec;

use crate::protocol::*;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Finished(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", m),
            ApiError::Finished(m) => (StatusCode::CONFLICT, "session_finished", m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        };
        let body = ErrorResponse {
            version: PROTOCOL_VERSION.to_string(),
            error: ErrorBody {
                code: code.to_string(),
                message,
            },
        };
        (status, Json(body)).into_response()
    }
}

pub struct AppState {
    env: Arc<EnvBundle>,
    env_dir: Option<PathBuf>,
    sessions: Mutex<HashMap<String, Arc<Mutex<EpisodeState>>>>,
    next_id: AtomicU64,
    pngs: Vec<OnceLock<Vec<u8>>>,
}

impl AppState {
    /// With `env_dir`, screen images are served from the bundle's cached
    /// PNGs; otherwise they are rendered on first request.
    pub fn new(env: Arc<EnvBundle>, env_dir: Option<PathBuf>) -> Self {
        let pngs = (0..env.screens.len()).map(|_| OnceLock::new()).collect();
        AppState {
            env,
            env_dir,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            pngs,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map lock").len()
    }

    fn png(&self, node: NodeId) -> Result<&[u8], ApiError> {
        let slot = self
            .pngs
            .get(node.index())
            .ok_or_else(|| ApiError::NotFound(format!("no screen {node}")))?;
        if let Some(bytes) = slot.get() {
            return Ok(bytes);
        }
        let bytes = match &self.env_dir {
            Some(dir) => load_screen_png(dir, &self.env, node)
                .map_err(|e| ApiError::Internal(e.to_string()))?,
            None => self
                .env
                .render(node)
                .ok_or_else(|| ApiError::NotFound(format!("no screen {node}")))?
                .to_png()
                .map_err(|e| ApiError::Internal(e.to_string()))?,
        };
        Ok(slot.get_or_init(|| bytes))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<EpisodeState>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session {id}")))
    }

    fn wire_observation(
        &self,
        obs: &Observation,
        inline: bool,
    ) -> Result<WireObservation, ApiError> {
        let image = if inline {
            Some(base64::engine::general_purpose::STANDARD.encode(self.png(obs.current_node)?))
        } else {
            None
        };
        Ok(WireObservation::from_observation(obs, image))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/version", get(version))
        .route("/session", post(create_session))
        .route("/session/{id}", get(get_session).delete(delete_session))
        .route("/session/{id}/step", post(step_session))
        .route("/screens/{file}", get(get_screen))
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed body: {e}")))
}

async fn version(State(app): State<Arc<AppState>>) -> Json<VersionInfo> {
    Json(VersionInfo {
        version: PROTOCOL_VERSION.to_string(),
        schema_version: SCHEMA_VERSION,
        renderer_version: RENDERER_VERSION,
        env_seed: app.env.seed,
        variant: app.env.variant.dir_name().to_string(),
        screens: app.env.screens.len(),
    })
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<SessionCreated>, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let task: TaskSpec = req
        .task
        .parse()
        .map_err(|e| ApiError::BadRequest(format!("{e}")))?;
    let max_rounds = req.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS);
    if max_rounds == 0 {
        return Err(ApiError::BadRequest("max_rounds must be at least 1".into()));
    }
    let config = EpisodeConfig::default()
        .with_max_rounds(max_rounds)
        .with_allow_complete(req.allow_complete.unwrap_or(true));
    let (state, obs) = EpisodeState::reset(&app.env, task, config)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let observation = app.wire_observation(&obs, req.inline_image)?;
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    app.sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Mutex::new(state)));
    Ok(Json(SessionCreated {
        version: PROTOCOL_VERSION.to_string(),
        session_id: id,
        observation,
    }))
}

async fn step_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StepResponse>, ApiError> {
    let req: StepRequest = parse_body(&body)?;
    let session = app.session(&id)?;
    let result = {
        let mut st = session.lock().expect("session lock");
        if st.done {
            return Err(ApiError::Finished(format!("session {id} is finished")));
        }
        st.step(&app.env, &req.raw_text)
            .map_err(|e| ApiError::Internal(e.to_string()))?
    };
    Ok(Json(StepResponse {
        version: PROTOCOL_VERSION.to_string(),
        observation: app.wire_observation(&result.observation, req.inline_image)?,
        done: result.done,
        a2b_reward: result.a2b_reward,
        info: result.info.into(),
    }))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    let session = app.session(&id)?;
    let st = session.lock().expect("session lock");
    Ok(Json(SessionSummary {
        version: PROTOCOL_VERSION.to_string(),
        session_id: id,
        task: st.task.instruction(),
        step_index: st.step_index,
        max_rounds: st.config.max_rounds,
        allow_complete: st.config.allow_complete,
        done: st.done,
        success: st.success,
        a2b_reward: st.a2b_reward(),
        history: st.history.clone(),
    }))
}

async fn delete_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Deleted>, ApiError> {
    match app.sessions.lock().expect("session map lock").remove(&id) {
        Some(_) => Ok(Json(Deleted {
            version: PROTOCOL_VERSION.to_string(),
            session_id: id,
            deleted: true,
        })),
        None => Err(ApiError::NotFound(format!("unknown session {id}"))),
    }
}

async fn get_screen(
    State(app): State<Arc<AppState>>,
    Path(file): Path<String>,
) -> Result<Response, ApiError> {
    let node: NodeId = file
        .strip_suffix(".png")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ApiError::NotFound(format!("no screen {file}")))?;
    let bytes = app.png(node)?.to_vec();
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(
    env: Arc<EnvBundle>,
    env_dir: Option<PathBuf>,
    addr: SocketAddr,
) -> std::io::Result<()> {
    let app = router(Arc::new(AppState::new(env, env_dir)));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("navsim: serving on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
