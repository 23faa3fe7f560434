//! Pairwise forced-choice study machinery: manifests, pair scheduling with
//! honeypots, the append-only vote store, voter filtering, score
//! aggregation and leaderboards.
//!
//! Scores follow the challenge protocol. `A_ijt` is 1 when voter `t`
//! preferred rendition `i` over `j` of the same scene and 0 otherwise, and
//!
//! ```text
//! S_i = (1 / (N·T)) · Σ_j Σ_t A_ijt
//! ```
//!
//! with `N` solutions and `T` voters. A solution's score is the mean of its
//! per-scene `S_i`.

mod leaderboard;
mod manifest;
mod schedule;
mod scoring;
mod store;

pub use leaderboard::{leaderboard, leaderboard_from_scores, load_times, Leaderboard, LeaderboardEntry, TimeValue};
pub use manifest::{Manifest, Rendition};
pub use schedule::{ScheduledPair, Scheduler};
pub use scoring::{
    apply_bans, compute_scores, evaluate, latest_votes, select_top_voters, voter_agreement, EvalOptions,
    RenditionScore, ScoreMode, ScoreTable, SolutionScore,
};
pub use store::{read_votes, AppendOutcome, VoteStore};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Left,
    Right,
    Same,
}

/// One forced-choice answer. `timestamp` is milliseconds since the Unix epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub vote_id: String,
    pub left: String,
    pub right: String,
    pub voter_id: String,
    pub choice: Choice,
    #[serde(default)]
    pub honeypot: bool,
    #[serde(default)]
    pub timestamp: u64,
}

impl VoteRecord {
    /// The preferred and the rejected rendition, or `None` for "same".
    pub fn winner_loser(&self) -> Option<(&str, &str)> {
        match self.choice {
            Choice::Left => Some((&self.left, &self.right)),
            Choice::Right => Some((&self.right, &self.left)),
            Choice::Same => None,
        }
    }

    /// Whether this answer fails a honeypot: any preference on an identical pair.
    pub fn fails_honeypot(&self) -> bool {
        self.honeypot && self.choice != Choice::Same
    }
}
