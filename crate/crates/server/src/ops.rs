use axum::extract::rejection::JsonRejection;
use axum::extract::Path;
use axum::Json;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use nightisp::evalstudy::{self, Leaderboard, Manifest};
use nightisp::pipeline::{self, PipelineSpec, RunOptions};
use nightisp::rawio;
use nightisp::wire::{
    LeaderboardRequest, PipelineSource, RenderRequest, RenderResponse, ScoreRequest, ScoreResponse, ValidateResponse,
};
use serde_json::Value;

use crate::error::ApiError;

fn json<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

pub(crate) async fn list_presets() -> Json<Vec<&'static str>> {
    Json(pipeline::preset_names().collect())
}

pub(crate) async fn get_preset(Path(name): Path<String>) -> Result<Json<PipelineSpec>, ApiError> {
    pipeline::preset(&name)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no preset `{name}`")))
}

fn resolve(source: &PipelineSource) -> Result<PipelineSpec, ApiError> {
    match source {
        PipelineSource::Preset { preset } => {
            pipeline::preset(preset).ok_or_else(|| ApiError::bad_request(format!("no preset `{preset}`")))
        }
        PipelineSource::Spec { spec } => Ok(spec.clone()),
    }
}

pub(crate) async fn validate(body: Result<Json<PipelineSource>, JsonRejection>) -> Result<Json<ValidateResponse>, ApiError> {
    let spec = resolve(&json(body)?)?;
    Ok(Json(match pipeline::validate(&spec) {
        Ok(()) => ValidateResponse {
            ok: true,
            index: None,
            stage_id: None,
            error: None,
        },
        Err(e) => ValidateResponse {
            ok: false,
            index: Some(e.index),
            stage_id: Some(e.stage_id.clone()),
            error: Some(e.to_string()),
        },
    }))
}

fn render_blocking(req: RenderRequest) -> Result<RenderResponse, ApiError> {
    let png = B64
        .decode(req.raw_png.as_bytes())
        .map_err(|e| ApiError::bad_request(format!("raw_png is not base64: {e}")))?;
    let sidecar = match &req.sidecar {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let raw = rawio::decode_raw(&png, &sidecar, &req.frame_id)?;
    let mut spec = resolve(&req.pipeline)?;
    for (k, v) in &req.overrides {
        spec.set_override(k, v)?;
    }
    if let Some((w, h)) = req.size {
        spec.output.width = w;
        spec.output.height = h;
    }
    let compiled = pipeline::compile(&spec).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let (bytes, out) = compiled.render(&raw, &RunOptions { seed: req.seed, gain_map: None })?;
    Ok(RenderResponse {
        frame_id: raw.meta.frame_id.clone(),
        format: compiled.output().format,
        image: B64.encode(bytes),
        width: out.image.width(),
        height: out.image.height(),
        reports: out.reports,
        total_seconds: out.total_seconds,
    })
}

pub(crate) async fn render(body: Result<Json<RenderRequest>, JsonRejection>) -> Result<Json<RenderResponse>, ApiError> {
    let req = json(body)?;
    let resp = tokio::task::spawn_blocking(move || render_blocking(req)).await??;
    Ok(Json(resp))
}

pub(crate) async fn score(body: Result<Json<ScoreRequest>, JsonRejection>) -> Result<Json<ScoreResponse>, ApiError> {
    let req = json(body)?;
    let resp = tokio::task::spawn_blocking(move || -> Result<ScoreResponse, ApiError> {
        let manifest = Manifest::new(req.manifest)?;
        let scores = evalstudy::evaluate(&req.votes, &manifest, &req.options)?;
        let leaderboard = match &req.times {
            Some(times) => Some(evalstudy::leaderboard(&scores, times)?),
            None => None,
        };
        Ok(ScoreResponse { scores, leaderboard })
    })
    .await??;
    Ok(Json(resp))
}

pub(crate) async fn leaderboard(
    body: Result<Json<LeaderboardRequest>, JsonRejection>,
) -> Result<Json<Leaderboard>, ApiError> {
    let req = json(body)?;
    let scores: Vec<(String, f64)> = req.scores.into_iter().collect();
    Ok(Json(evalstudy::leaderboard_from_scores(&scores, &req.times)?))
}
