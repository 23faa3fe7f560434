//! HTTP/JSON service for nightisp.
//!
//! Two groups of endpoints share one router:
//!
//! * the pairwise study (`/api/pair`, `/api/vote`, `/api/scores`, `/img/...`),
//!   backed by a rendition manifest and an append-only vote log;
//! * stateless operations (`/api/render`, `/api/validate`, `/api/presets`,
//!   `/api/score`, `/api/leaderboard`).
//!
//! CPU-bound work and blocking file writes run on the blocking thread pool.

mod error;
mod ops;
mod study;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use nightisp::evalstudy::EvalOptions;
use tokio::net::TcpListener;

pub use error::ApiError;
pub use study::Study;

/// Largest accepted request body; a full-size 16-bit frame in base64 is ~35 MB.
pub const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    /// Rendition manifest; without one only the stateless endpoints work.
    pub manifest: Option<PathBuf>,
    pub store: PathBuf,
    pub honeypot_rate: f64,
    pub seed: u64,
    pub eval: EvalOptions,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            manifest: None,
            store: PathBuf::from("votes.jsonl"),
            honeypot_rate: 0.1,
            seed: 0,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    study: Option<Arc<Study>>,
}

impl AppState {
    pub fn new(study: Option<Study>) -> Self {
        AppState {
            study: study.map(Arc::new),
        }
    }

    pub fn from_config(config: &ServeConfig) -> nightisp::Result<Self> {
        let study = match &config.manifest {
            Some(path) => Some(Study::open(path, &config.store, config.honeypot_rate, config.seed, config.eval)?),
            None => None,
        };
        Ok(AppState::new(study))
    }

    pub fn study(&self) -> Option<&Study> {
        self.study.as_deref()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/api/pair", get(study::get_pair))
        .route("/api/vote", post(study::post_vote))
        .route("/api/scores", get(study::get_scores))
        .route("/img/{rendition_id}", get(study::get_image))
        .route("/img/p/{token}", get(study::get_side_image))
        .route("/api/presets", get(ops::list_presets))
        .route("/api/presets/{name}", get(ops::get_preset))
        .route("/api/validate", post(ops::validate))
        .route("/api/render", post(ops::render))
        .route("/api/score", post(ops::score))
        .route("/api/leaderboard", post(ops::leaderboard))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves on an already-bound listener until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn run(config: ServeConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = AppState::from_config(&config)?;
    let listener = TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
