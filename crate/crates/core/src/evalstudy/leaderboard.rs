use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ScoreTable;

/// Processing time of a solution; `Unbounded` marks entries that could not
/// be timed (written `"inf"` in JSON).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeValue {
    Finite(f64),
    Unbounded,
}

impl TimeValue {
    fn key(self) -> f64 {
        match self {
            TimeValue::Finite(s) => s,
            TimeValue::Unbounded => f64::INFINITY,
        }
    }

    fn cmp_time(self, other: TimeValue) -> Ordering {
        self.key().total_cmp(&other.key())
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeValue::Finite(s) => write!(f, "{s}"),
            TimeValue::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for TimeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeValue::Finite(v) => s.serialize_f64(*v),
            TimeValue::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TimeValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() && v >= 0.0 => Ok(TimeValue::Finite(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("invalid time {v}"))),
            Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(TimeValue::Unbounded),
                other => other
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .map(TimeValue::Finite)
                    .ok_or_else(|| serde::de::Error::custom(format!("invalid time `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub solution_id: String,
    pub mean_score: f64,
    pub time_seconds: TimeValue,
    pub quality_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub efficiency_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    /// All solutions by score.
    pub quality: Vec<LeaderboardEntry>,
    /// The quality top five by time.
    pub efficiency: Vec<LeaderboardEntry>,
}

/// How many quality leaders are re-ranked by speed.
pub const EFFICIENCY_POOL: usize = 5;

/// Ranks solutions by score (ties: faster first, then id) and re-ranks the
/// top five by time, untimed entries last.
pub fn leaderboard_from_scores(
    scores: &[(String, f64)],
    times: &BTreeMap<String, TimeValue>,
) -> Result<Leaderboard> {
    let mut rows = Vec::with_capacity(scores.len());
    for (id, score) in scores {
        let time = *times.get(id).ok_or_else(|| Error::MissingTime(id.clone()))?;
        rows.push((id.clone(), *score, time));
    }
    rows.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.2.cmp_time(b.2))
            .then(a.0.cmp(&b.0))
    });
    let mut quality: Vec<LeaderboardEntry> = rows
        .into_iter()
        .enumerate()
        .map(|(i, (solution_id, mean_score, time_seconds))| LeaderboardEntry {
            solution_id,
            mean_score,
            time_seconds,
            quality_rank: i + 1,
            efficiency_rank: None,
        })
        .collect();
    let mut efficiency: Vec<LeaderboardEntry> = quality.iter().take(EFFICIENCY_POOL).cloned().collect();
    efficiency.sort_by(|a, b| a.time_seconds.cmp_time(b.time_seconds).then(a.quality_rank.cmp(&b.quality_rank)));
    for (i, e) in efficiency.iter_mut().enumerate() {
        e.efficiency_rank = Some(i + 1);
        quality[e.quality_rank - 1].efficiency_rank = Some(i + 1);
    }
    Ok(Leaderboard { quality, efficiency })
}

pub fn leaderboard(scores: &ScoreTable, times: &BTreeMap<String, TimeValue>) -> Result<Leaderboard> {
    leaderboard_from_scores(&scores.solution_scores(), times)
}

/// Reads a JSON object mapping solution id to seconds or `"inf"`.
pub fn load_times(path: impl AsRef<Path>) -> Result<BTreeMap<String, TimeValue>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Param(format!("times file {}: {e}", path.display())))
}

impl Leaderboard {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .quality
            .iter()
            .map(|e| e.solution_id.len())
            .max()
            .unwrap_or(0)
            .max(8);
        out.push_str(&format!("{:>4}  {:<width$}  {:>6}  {:>10}\n", "rank", "solution", "score", "time (s)"));
        for e in &self.quality {
            out.push_str(&format!(
                "{:>4}  {:<width$}  {:>6.2}  {:>10}\n",
                e.quality_rank, e.solution_id, e.mean_score, e.time_seconds
            ));
        }
        out.push_str("\nefficiency (quality top 5 by time)\n");
        for e in &self.efficiency {
            out.push_str(&format!(
                "{:>4}  {:<width$}  {:>6.2}  {:>10}\n",
                e.efficiency_rank.unwrap_or(0),
                e.solution_id,
                e.mean_score,
                e.time_seconds
            ));
        }
        out
    }
}
