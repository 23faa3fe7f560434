//! Blocking client for the nightisp HTTP service.
//!
//! ```no_run
//! let c = nightisp_client::Client::new("http://127.0.0.1:8080")?;
//! let pair = c.pair("alice")?;
//! c.vote(&pair.pair_id, "alice", nightisp::evalstudy::Choice::Left)?;
//! # Ok::<(), nightisp_client::ClientError>(())
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use nightisp::evalstudy::{Choice, Leaderboard, ScoreTable, TimeValue};
use nightisp::pipeline::PipelineSpec;
use nightisp::wire::{
    ErrorBody, LeaderboardRequest, PairResponse, PipelineSource, RenderRequest, RenderResponse, ScoreRequest,
    ScoreResponse, ValidateResponse, VoteRequest, VoteResponse,
};
use reqwest::blocking::{Client as Http, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Status { status: u16, message: String },
    #[error("bad response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Status { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Outcome of a vote submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteOutcome {
    Recorded,
    /// The pair had already been answered (HTTP 409).
    Duplicate,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: Http,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Result<Self> {
        Client::with_timeout(base_url, Duration::from_secs(600))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Result<Self> {
        let base = base_url.into().trim_end_matches('/').to_string();
        let http = Http::builder().timeout(timeout).build()?;
        Ok(Client { base, http })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        if path.starts_with("http://") || path.starts_with("https://") {
            path.to_string()
        } else {
            format!("{}{}", self.base, path)
        }
    }

    fn send(req: RequestBuilder) -> Result<reqwest::blocking::Response> {
        let resp = req.send()?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Status {
            status: status.as_u16(),
            message,
        })
    }

    fn json<T: DeserializeOwned>(req: RequestBuilder) -> Result<T> {
        let text = Client::send(req)?.text()?;
        serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        Client::json(self.http.get(self.url(path)))
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        Client::json(self.http.post(self.url(path)).json(body))
    }

    pub fn health(&self) -> Result<()> {
        Client::send(self.http.get(self.url("/health"))).map(drop)
    }

    pub fn pair(&self, voter: &str) -> Result<PairResponse> {
        Client::json(self.http.get(self.url("/api/pair")).query(&[("voter", voter)]))
    }

    pub fn vote(&self, pair_id: &str, voter: &str, choice: Choice) -> Result<VoteOutcome> {
        let body = VoteRequest {
            pair_id: pair_id.to_string(),
            voter: voter.to_string(),
            choice,
        };
        match self.post::<_, VoteResponse>("/api/vote", &body) {
            Ok(_) => Ok(VoteOutcome::Recorded),
            Err(ClientError::Status { status, .. }) if status == StatusCode::CONFLICT.as_u16() => {
                Ok(VoteOutcome::Duplicate)
            }
            Err(e) => Err(e),
        }
    }

    pub fn scores(&self) -> Result<ScoreTable> {
        self.get("/api/scores")
    }

    /// Fetches an image by URL path, as returned in a [`PairResponse`].
    pub fn image(&self, path: &str) -> Result<Vec<u8>> {
        Ok(Client::send(self.http.get(self.url(path)))?.bytes()?.to_vec())
    }

    pub fn presets(&self) -> Result<Vec<String>> {
        self.get("/api/presets")
    }

    pub fn preset(&self, name: &str) -> Result<PipelineSpec> {
        self.get(&format!("/api/presets/{name}"))
    }

    pub fn validate(&self, source: &PipelineSource) -> Result<ValidateResponse> {
        self.post("/api/validate", source)
    }

    pub fn render(&self, req: &RenderRequest) -> Result<RenderResponse> {
        self.post("/api/render", req)
    }

    /// Renders and returns the decoded image bytes alongside the response.
    pub fn render_bytes(&self, req: &RenderRequest) -> Result<(Vec<u8>, RenderResponse)> {
        let resp = self.render(req)?;
        let bytes = B64
            .decode(resp.image.as_bytes())
            .map_err(|e| ClientError::Decode(format!("image is not base64: {e}")))?;
        Ok((bytes, resp))
    }

    pub fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse> {
        self.post("/api/score", req)
    }

    pub fn leaderboard(
        &self,
        scores: BTreeMap<String, f64>,
        times: BTreeMap<String, TimeValue>,
    ) -> Result<Leaderboard> {
        self.post("/api/leaderboard", &LeaderboardRequest { scores, times })
    }
}

/// Builds a render request from the raw PNG bytes and sidecar text of one frame.
pub fn render_request(frame_id: &str, raw_png: &[u8], sidecar: &str, pipeline: PipelineSource) -> RenderRequest {
    RenderRequest {
        frame_id: frame_id.to_string(),
        raw_png: B64.encode(raw_png),
        sidecar: serde_json::Value::String(sidecar.to_string()),
        pipeline,
        overrides: BTreeMap::new(),
        seed: 0,
        size: None,
    }
}
