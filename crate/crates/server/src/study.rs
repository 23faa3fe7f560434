use std::collections::HashMap;
use std::path::Path;
use std::sync::{Mutex, PoisonError};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use nightisp::evalstudy::{self, AppendOutcome, EvalOptions, Manifest, ScoreTable, Scheduler, VoteRecord, VoteStore};
use nightisp::wire::{PairResponse, VoteRequest, VoteResponse};
use serde::Deserialize;

use crate::error::ApiError;
use crate::AppState;

#[derive(Debug, Clone)]
struct IssuedPair {
    left: String,
    right: String,
    honeypot: bool,
    voter: String,
}

/// State of a running study.
pub struct Study {
    manifest: Manifest,
    store: Mutex<VoteStore>,
    scheduler: Mutex<Scheduler>,
    pairs: Mutex<HashMap<String, IssuedPair>>,
    /// Opaque pair-side image token → rendition id.
    sides: Mutex<HashMap<String, String>>,
    eval: EvalOptions,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

impl Study {
    pub fn new(manifest: Manifest, store: VoteStore, honeypot_rate: f64, seed: u64, eval: EvalOptions) -> nightisp::Result<Self> {
        let scheduler = Scheduler::from_manifest(&manifest, honeypot_rate, seed)?;
        Ok(Study {
            manifest,
            store: Mutex::new(store),
            scheduler: Mutex::new(scheduler),
            pairs: Mutex::new(HashMap::new()),
            sides: Mutex::new(HashMap::new()),
            eval,
        })
    }

    pub fn open(
        manifest: impl AsRef<Path>,
        store: impl AsRef<Path>,
        honeypot_rate: f64,
        seed: u64,
        eval: EvalOptions,
    ) -> nightisp::Result<Self> {
        let manifest = Manifest::load(manifest)?;
        manifest.check_paths()?;
        Study::new(manifest, VoteStore::open(store)?, honeypot_rate, seed, eval)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn votes(&self) -> Vec<VoteRecord> {
        lock(&self.store).votes().to_vec()
    }

    pub fn scores(&self) -> nightisp::Result<ScoreTable> {
        evalstudy::evaluate(&self.votes(), &self.manifest, &self.eval)
    }

    fn issue(&self, voter: &str) -> PairResponse {
        let (pair, pair_id, left_token, right_token) = {
            let mut s = lock(&self.scheduler);
            let pair = s.next_pair();
            (pair, s.token(), s.token(), s.token())
        };
        {
            let mut sides = lock(&self.sides);
            sides.insert(left_token.clone(), pair.left.clone());
            sides.insert(right_token.clone(), pair.right.clone());
        }
        lock(&self.pairs).insert(
            pair_id.clone(),
            IssuedPair {
                left: pair.left,
                right: pair.right,
                honeypot: pair.honeypot,
                voter: voter.to_string(),
            },
        );
        PairResponse {
            pair_id,
            left_url: format!("/img/p/{left_token}"),
            right_url: format!("/img/p/{right_token}"),
        }
    }

    fn record(&self, req: &VoteRequest) -> Result<(), ApiError> {
        let issued = lock(&self.pairs)
            .get(&req.pair_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown pair `{}`", req.pair_id)))?;
        if issued.voter != req.voter {
            return Err(ApiError::bad_request("pair was issued to a different voter"));
        }
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let vote = VoteRecord {
            vote_id: req.pair_id.clone(),
            left: issued.left,
            right: issued.right,
            voter_id: req.voter.clone(),
            choice: req.choice,
            honeypot: issued.honeypot,
            timestamp,
        };
        match lock(&self.store).append(vote)? {
            AppendOutcome::Appended => Ok(()),
            AppendOutcome::Duplicate => Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("pair `{}` already answered", req.pair_id),
            )),
        }
    }
}

fn study(state: &AppState) -> Result<&Study, ApiError> {
    state
        .study()
        .ok_or_else(|| ApiError::not_found("no study is configured on this server"))
}

#[derive(Debug, Deserialize)]
pub(crate) struct PairQuery {
    voter: Option<String>,
}

pub(crate) async fn get_pair(
    State(state): State<AppState>,
    Query(q): Query<PairQuery>,
) -> Result<Json<PairResponse>, ApiError> {
    let voter = q.voter.filter(|v| !v.trim().is_empty()).ok_or_else(|| ApiError::bad_request("missing `voter`"))?;
    Ok(Json(study(&state)?.issue(&voter)))
}

pub(crate) async fn post_vote(
    State(state): State<AppState>,
    body: Result<Json<VoteRequest>, JsonRejection>,
) -> Result<Json<VoteResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if req.voter.trim().is_empty() {
        return Err(ApiError::bad_request("missing `voter`"));
    }
    study(&state)?;
    let pair_id = req.pair_id.clone();
    let st = state.clone();
    tokio::task::spawn_blocking(move || study(&st)?.record(&req)).await??;
    Ok(Json(VoteResponse {
        pair_id,
        recorded: true,
    }))
}

pub(crate) async fn get_scores(State(state): State<AppState>) -> Result<Json<ScoreTable>, ApiError> {
    study(&state)?;
    let table = tokio::task::spawn_blocking(move || study(&state)?.scores().map_err(ApiError::from)).await??;
    Ok(Json(table))
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn serve_rendition(study: &Study, rendition_id: &str) -> Result<impl IntoResponse, ApiError> {
    let r = study
        .manifest()
        .get(rendition_id)
        .ok_or_else(|| ApiError::not_found("unknown image"))?;
    let bytes = tokio::fs::read(&r.image_path)
        .await
        .map_err(|e| ApiError::internal(format!("reading image: {e}")))?;
    Ok((
        [
            (header::CONTENT_TYPE, content_type(&r.image_path)),
            (header::CACHE_CONTROL, "no-store"),
        ],
        bytes,
    ))
}

pub(crate) async fn get_image(
    State(state): State<AppState>,
    UrlPath(rendition_id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    serve_rendition(study(&state)?, &rendition_id).await
}

pub(crate) async fn get_side_image(
    State(state): State<AppState>,
    UrlPath(token): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let study = study(&state)?;
    let id = lock(&study.sides)
        .get(&token)
        .cloned()
        .ok_or_else(|| ApiError::not_found("unknown image"))?;
    serve_rendition(study, &id).await
}
