//! JSON bodies exchanged between the HTTP service and its clients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::evalstudy::{Choice, EvalOptions, Leaderboard, Rendition, ScoreTable, TimeValue, VoteRecord};
use crate::output::OutputFormat;
use crate::pipeline::{PipelineSpec, StageReport};

/// `GET /api/pair?voter=<id>`. Image URLs are opaque and differ even when
/// both sides show the same picture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResponse {
    pub pair_id: String,
    pub left_url: String,
    pub right_url: String,
}

/// `POST /api/vote`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRequest {
    pub pair_id: String,
    pub voter: String,
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResponse {
    pub pair_id: String,
    pub recorded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Where a render request takes its pipeline from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PipelineSource {
    Preset { preset: String },
    Spec { spec: PipelineSpec },
}

/// `POST /api/render`: one challenge-format frame, base64-encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub frame_id: String,
    /// Base64 of the 16-bit mosaic PNG.
    pub raw_png: String,
    /// The JSON sidecar, as a string or inline object.
    pub sidecar: Value,
    #[serde(flatten)]
    pub pipeline: PipelineSource,
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub size: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderResponse {
    pub frame_id: String,
    pub format: OutputFormat,
    /// Base64 of the encoded image.
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub reports: Vec<StageReport>,
    pub total_seconds: f64,
}

/// `POST /api/validate` answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// `POST /api/score`: stateless scoring of a supplied study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub votes: Vec<VoteRecord>,
    pub manifest: Vec<Rendition>,
    #[serde(default)]
    pub options: EvalOptions,
    #[serde(default)]
    pub times: Option<BTreeMap<String, TimeValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: ScoreTable,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaderboard: Option<Leaderboard>,
}

/// `POST /api/leaderboard`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRequest {
    pub scores: BTreeMap<String, f64>,
    pub times: BTreeMap<String, TimeValue>,
}
