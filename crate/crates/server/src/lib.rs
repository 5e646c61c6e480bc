//! REST service over the knowledge-graph pipeline and the feedback store.
//!
//! | Method | Path                       | Roles               |
//! |--------|----------------------------|---------------------|
//! | POST   | `/auth/session`            | none                |
//! | GET    | `/videos`                  | student, instructor |
//! | POST   | `/videos`                  | instructor          |
//! | GET    | `/videos/{id}`             | student, instructor |
//! | GET    | `/videos/{id}/graph`       | student, instructor |
//! | POST   | `/videos/{id}/feedback`    | student             |
//! | GET    | `/videos/{id}/dashboard`   | instructor          |
//! | GET    | `/videos/{id}/comments`    | student, instructor |
//!
//! Requests carry `Authorization: Bearer <token>` from `/auth/session`.
//! Errors come back as `{"error": <code>, "message": <text>}`.

pub mod auth;
mod error;
mod handlers;
mod jobs;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::{middleware, Router};
use tokio::sync::Semaphore;
use tsconnect_core::extract::AdapterSet;
use tsconnect_core::feedback::{FeedbackError, FeedbackStore};
use tsconnect_core::graph::GraphDocument;
use tsconnect_core::pipeline::ProcessParams;

pub use auth::{Role, RouteRule, Session, GATING_TABLE};
pub use error::ApiError;
pub use handlers::{FeedbackBatch, VideoMeta};
pub use jobs::{ProcessingState, VideoRecord};

pub struct ServerConfig {
    /// SQLite file for feedback; `None` keeps it in memory.
    pub store_path: Option<PathBuf>,
    pub adapters: AdapterSet,
    pub params: ProcessParams,
    /// Concurrent pipeline jobs.
    pub workers: usize,
    pub session_ttl: chrono::Duration,
    pub max_upload_bytes: usize,
}

impl ServerConfig {
    pub fn new(adapters: AdapterSet) -> Self {
        Self {
            store_path: None,
            adapters,
            params: ProcessParams::default(),
            workers: 2,
            session_ttl: chrono::Duration::hours(12),
            max_upload_bytes: 1 << 30,
        }
    }
}

/// Service state behind [`AppState`].
pub struct Shared {
    pub(crate) store: Mutex<FeedbackStore>,
    pub(crate) videos: RwLock<BTreeMap<String, VideoRecord>>,
    pub(crate) graphs: RwLock<BTreeMap<String, Arc<GraphDocument>>>,
    pub(crate) sessions: auth::Sessions,
    pub(crate) pool: Arc<Semaphore>,
    pub(crate) adapters: AdapterSet,
    pub(crate) params: ProcessParams,
    pub(crate) session_ttl: chrono::Duration,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl std::ops::Deref for AppState {
    type Target = Shared;

    fn deref(&self) -> &Shared {
        &self.0
    }
}

impl AppState {
    pub fn new(config: &ServerConfig) -> Result<Self, FeedbackError> {
        let store = match &config.store_path {
            Some(p) => FeedbackStore::open(p)?,
            None => FeedbackStore::in_memory()?,
        };
        Ok(Self(Arc::new(Shared {
            store: Mutex::new(store),
            videos: RwLock::default(),
            graphs: RwLock::default(),
            sessions: auth::Sessions::default(),
            pool: Arc::new(Semaphore::new(config.workers.max(1))),
            adapters: config.adapters.clone(),
            params: config.params.clone(),
            session_ttl: config.session_ttl,
        })))
    }

    /// Current record of a video, if known.
    pub fn video(&self, id: &str) -> Option<VideoRecord> {
        self.videos.read().expect("video lock").get(id).cloned()
    }
}

pub fn router(state: AppState, max_upload_bytes: usize) -> Router {
    Router::new()
        .route("/auth/session", post(handlers::create_session))
        .route("/videos", get(handlers::list_videos).post(handlers::upload_video))
        .route("/videos/{id}", get(handlers::get_video))
        .route("/videos/{id}/graph", get(handlers::get_graph))
        .route("/videos/{id}/feedback", post(handlers::post_feedback))
        .route("/videos/{id}/dashboard", get(handlers::dashboard))
        .route("/videos/{id}/comments", get(handlers::list_comments))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth::gate))
        .layer(DefaultBodyLimit::max(max_upload_bytes))
        .with_state(state)
}

pub fn app(config: &ServerConfig) -> Result<(Router, AppState), FeedbackError> {
    let state = AppState::new(config)?;
    Ok((router(state.clone(), config.max_upload_bytes), state))
}

pub async fn serve(addr: SocketAddr, config: &ServerConfig) -> std::io::Result<()> {
    let (router, _) = app(config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router).await
}
