use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Choice, Manifest, VoteRecord};

/// Removes every vote of any voter who expressed a preference on a honeypot
/// pair, whenever that happened.
pub fn apply_bans(votes: &[VoteRecord]) -> (Vec<VoteRecord>, BTreeSet<String>) {
    let banned: BTreeSet<String> = votes
        .iter()
        .filter(|v| v.fails_honeypot())
        .map(|v| v.voter_id.clone())
        .collect();
    let clean = votes
        .iter()
        .filter(|v| !banned.contains(&v.voter_id))
        .cloned()
        .collect();
    (clean, banned)
}

/// Non-honeypot votes with repeats collapsed: for each voter and unordered
/// pair only the latest answer (by timestamp, then vote_id) survives.
pub fn latest_votes(votes: &[VoteRecord]) -> Vec<&VoteRecord> {
    let mut latest: HashMap<(&str, &str, &str), &VoteRecord> = HashMap::new();
    for v in votes.iter().filter(|v| !v.honeypot && v.left != v.right) {
        let (a, b) = if v.left <= v.right { (&v.left, &v.right) } else { (&v.right, &v.left) };
        let key = (v.voter_id.as_str(), a.as_str(), b.as_str());
        let newer = |old: &VoteRecord| (v.timestamp, &v.vote_id) > (old.timestamp, &old.vote_id);
        match latest.get(&key) {
            Some(old) if !newer(old) => {}
            _ => {
                latest.insert(key, v);
            }
        }
    }
    let mut out: Vec<&VoteRecord> = latest.into_values().collect();
    out.sort_by(|a, b| (&a.voter_id, &a.vote_id).cmp(&(&b.voter_id, &b.vote_id)));
    out
}

/// Outcome of a vote relative to the sorted pair `(a, b)`.
fn outcome(v: &VoteRecord) -> ((&str, &str), i8) {
    let (a, b, flipped) = if v.left <= v.right {
        (v.left.as_str(), v.right.as_str(), false)
    } else {
        (v.right.as_str(), v.left.as_str(), true)
    };
    let o = match (v.choice, flipped) {
        (Choice::Same, _) => 0,
        (Choice::Left, false) | (Choice::Right, true) => 1,
        _ => -1,
    };
    ((a, b), o)
}

/// Per-voter share of non-honeypot answers that match the most common
/// answer for that pair (every tied most-common answer counts as a match).
/// Voters with no such answers score 0. Also returns the answer counts.
pub fn voter_agreement(votes: &[VoteRecord]) -> BTreeMap<String, (f64, usize)> {
    let latest = latest_votes(votes);
    let mut counts: HashMap<(&str, &str), [usize; 3]> = HashMap::new();
    for v in &latest {
        let (pair, o) = outcome(v);
        counts.entry(pair).or_default()[(o + 1) as usize] += 1;
    }
    let mut per_voter: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for v in votes {
        per_voter.entry(v.voter_id.clone()).or_default();
    }
    for v in &latest {
        let (pair, o) = outcome(v);
        let c = counts[&pair];
        let best = *c.iter().max().expect("three outcomes");
        let e = per_voter.get_mut(&v.voter_id).expect("voter registered");
        e.1 += 1;
        if c[(o + 1) as usize] == best {
            e.0 += 1;
        }
    }
    per_voter
        .into_iter()
        .map(|(id, (hit, n))| {
            let share = if n == 0 { 0.0 } else { hit as f64 / n as f64 };
            (id, (share, n))
        })
        .collect()
}

/// The best `⌈fraction · V⌉` voters by agreement with the per-pair
/// majority. Ties go to the voter with more answers, then to the smaller id.
pub fn select_top_voters(votes: &[VoteRecord], fraction: f64) -> Result<BTreeSet<String>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Param(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let mut ranked: Vec<(String, (f64, usize))> = voter_agreement(votes).into_iter().collect();
    ranked.sort_by(|(ia, (sa, na)), (ib, (sb, nb))| {
        sb.total_cmp(sa).then(nb.cmp(na)).then(ia.cmp(ib))
    });
    let keep = ((fraction * ranked.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(ranked.into_iter().take(keep).map(|(id, _)| id).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// `S_i = Σ_j Σ_t A_ijt / (N·T)`.
    #[default]
    Literal,
    /// `S_i` = wins over comparisons actually made involving `i`.
    Observed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenditionScore {
    pub rendition_id: String,
    pub solution_id: String,
    pub scene_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionScore {
    pub solution_id: String,
    pub score: f64,
    pub scenes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub mode: ScoreMode,
    pub same_counts_half: bool,
    /// Number of solutions, `N`.
    pub n_solutions: usize,
    /// Number of voters, `T`.
    pub n_voters: usize,
    pub renditions: Vec<RenditionScore>,
    pub solutions: Vec<SolutionScore>,
    pub banned_voters: BTreeSet<String>,
    pub retained_voters: BTreeSet<String>,
}

impl ScoreTable {
    pub fn solution_scores(&self) -> Vec<(String, f64)> {
        self.solutions.iter().map(|s| (s.solution_id.clone(), s.score)).collect()
    }

    pub fn rendition(&self, id: &str) -> Option<f64> {
        self.renditions.iter().find(|r| r.rendition_id == id).map(|r| r.score)
    }
}

/// Aggregates votes into per-rendition and per-solution scores.
///
/// `T` is the number of distinct voters in `votes`; honeypot answers never
/// count. A "same" answer adds nothing unless `same_counts_half` is set, in
/// which case it adds ½ to both directions.
pub fn compute_scores(
    votes: &[VoteRecord],
    manifest: &Manifest,
    mode: ScoreMode,
    same_counts_half: bool,
) -> Result<ScoreTable> {
    for v in votes {
        for id in [&v.left, &v.right] {
            if manifest.get(id).is_none() {
                return Err(Error::UnknownRendition(id.clone()));
            }
        }
        if manifest.get(&v.left).map(|r| &r.scene_id) != manifest.get(&v.right).map(|r| &r.scene_id) {
            return Err(Error::Param(format!(
                "vote `{}` compares renditions of different scenes",
                v.vote_id
            )));
        }
    }
    let voters: BTreeSet<String> = votes.iter().map(|v| v.voter_id.clone()).collect();
    let n = manifest.solutions().len();
    let t = voters.len();

    let mut wins: HashMap<&str, f64> = HashMap::new();
    let mut compared: HashMap<&str, usize> = HashMap::new();
    for v in latest_votes(votes) {
        *compared.entry(&v.left).or_default() += 1;
        *compared.entry(&v.right).or_default() += 1;
        match v.winner_loser() {
            Some((w, _)) => *wins.entry(w).or_default() += 1.0,
            None if same_counts_half => {
                *wins.entry(&v.left).or_default() += 0.5;
                *wins.entry(&v.right).or_default() += 0.5;
            }
            None => {}
        }
    }

    let mut renditions: Vec<RenditionScore> = manifest
        .renditions()
        .iter()
        .map(|r| {
            let w = wins.get(r.rendition_id.as_str()).copied().unwrap_or(0.0);
            let score = match mode {
                ScoreMode::Literal if n * t > 0 => w / (n * t) as f64,
                ScoreMode::Observed => match compared.get(r.rendition_id.as_str()) {
                    Some(&c) if c > 0 => w / c as f64,
                    _ => 0.0,
                },
                _ => 0.0,
            };
            RenditionScore {
                rendition_id: r.rendition_id.clone(),
                solution_id: r.solution_id.clone(),
                scene_id: r.scene_id.clone(),
                score,
            }
        })
        .collect();
    renditions.sort_by(|a, b| a.rendition_id.cmp(&b.rendition_id));

    let mut per_solution: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for r in &renditions {
        per_solution.entry(&r.solution_id).or_default().push((&r.scene_id, r.score));
    }
    let solutions = per_solution
        .into_iter()
        .map(|(sol, mut scores)| {
            scores.sort_by(|a, b| a.0.cmp(b.0));
            SolutionScore {
                solution_id: sol.to_string(),
                score: scores.iter().map(|s| s.1).sum::<f64>() / scores.len() as f64,
                scenes: scores.len(),
            }
        })
        .collect();

    Ok(ScoreTable {
        mode,
        same_counts_half,
        n_solutions: n,
        n_voters: t,
        renditions,
        solutions,
        banned_voters: BTreeSet::new(),
        retained_voters: voters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Share of best voters kept, in `(0, 1]`.
    pub top_voters: f64,
    pub mode: ScoreMode,
    pub same_counts_half: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            top_voters: 1.0,
            mode: ScoreMode::Literal,
            same_counts_half: false,
        }
    }
}

/// Full protocol: bans first, then the top-voter filter, then aggregation.
pub fn evaluate(votes: &[VoteRecord], manifest: &Manifest, opts: &EvalOptions) -> Result<ScoreTable> {
    let (clean, banned) = apply_bans(votes);
    let keep = if clean.is_empty() {
        BTreeSet::new()
    } else {
        select_top_voters(&clean, opts.top_voters)?
    };
    let retained: Vec<VoteRecord> = clean.into_iter().filter(|v| keep.contains(&v.voter_id)).collect();
    let mut table = compute_scores(&retained, manifest, opts.mode, opts.same_counts_half)?;
    table.banned_voters = banned;
    Ok(table)
}
