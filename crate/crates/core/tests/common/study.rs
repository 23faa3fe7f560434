use std::collections::{BTreeMap, BTreeSet};

use nightisp::evalstudy::{Choice, Manifest, Rendition, TimeValue, VoteRecord};
use rand::Rng;

/// Final challenge standings: solution, mean score, seconds per image.
pub const STANDINGS: [(&str, f64, Option<f64>); 9] = [
    ("DH-AISP", 0.74, Some(16.3)),
    ("MiAlgo", 0.73, Some(1.5)),
    ("IVLTeam", 0.67, Some(5.8)),
    ("SCBC", 0.62, Some(3.2)),
    ("Manual", 0.53, None),
    ("IIR-Lab", 0.46, Some(23.0)),
    ("PolyuColor", 0.43, Some(3.1)),
    ("OzUVGL", 0.35, Some(144.8)),
    ("baseline", 0.31, Some(23.0)),
];

pub const EFFICIENCY_ORDER: [&str; 5] = ["MiAlgo", "SCBC", "IVLTeam", "DH-AISP", "Manual"];

pub fn standings_scores() -> Vec<(String, f64)> {
    STANDINGS.iter().map(|(s, q, _)| (s.to_string(), *q)).collect()
}

pub fn standings_times() -> BTreeMap<String, TimeValue> {
    STANDINGS
        .iter()
        .map(|(s, _, t)| (s.to_string(), t.map_or(TimeValue::Unbounded, TimeValue::Finite)))
        .collect()
}

pub fn rendition(sol: &str, scene: &str) -> Rendition {
    Rendition {
        rendition_id: format!("{sol}@{scene}"),
        solution_id: sol.into(),
        scene_id: scene.into(),
        image_path: format!("{sol}/{scene}.jpg").into(),
    }
}

/// A random study: up to 6 solutions, 5 scenes and 10 voters. Some
/// solutions skip some scenes, voters repeat pairs, and a few honeypots
/// are answered correctly.
pub fn random_study(r: &mut impl Rng) -> (Manifest, Vec<VoteRecord>) {
    let n = r.random_range(2..=6);
    let scenes = r.random_range(1..=5);
    let voters = r.random_range(1..=10);
    let mut list = Vec::new();
    for s in 0..scenes {
        for k in 0..n {
            if k < 2 || r.random_bool(0.8) {
                list.push(rendition(&format!("sol{k}"), &format!("scene{s}")));
            }
        }
    }
    let manifest = Manifest::new(list).unwrap();
    let by_scene = manifest.scenes();
    let scene_ids: Vec<&str> = by_scene.keys().copied().collect();
    let mut votes = Vec::new();
    for i in 0..r.random_range(0..60) {
        let ids = &by_scene[scene_ids[r.random_range(0..scene_ids.len())]];
        let voter = format!("v{}", r.random_range(0..voters));
        let a = ids[r.random_range(0..ids.len())];
        let honeypot = r.random_bool(0.1);
        let b = if honeypot {
            a
        } else {
            loop {
                let b = ids[r.random_range(0..ids.len())];
                if b != a {
                    break b;
                }
            }
        };
        let choice = if honeypot {
            Choice::Same
        } else {
            [Choice::Left, Choice::Right, Choice::Same][r.random_range(0..3)]
        };
        votes.push(VoteRecord {
            vote_id: format!("q{i:03}"),
            left: a.into(),
            right: b.into(),
            voter_id: voter,
            choice,
            honeypot,
            timestamp: r.random_range(0..20),
        });
    }
    (manifest, votes)
}

/// Textbook aggregation: for every rendition `i`, every other rendition `j`
/// of its scene and every voter `t`, add 1 when `t`'s latest answer on
/// `{i, j}` preferred `i`, then divide by `N·T`. Solutions average their
/// scenes. Returns rendition and solution scores.
pub fn oracle_literal(manifest: &Manifest, votes: &[VoteRecord]) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let voters: BTreeSet<&str> = votes.iter().map(|v| v.voter_id.as_str()).collect();
    let n = manifest.solutions().len();
    let t = voters.len();
    let mut rend = BTreeMap::new();
    for ri in manifest.renditions() {
        let i = ri.rendition_id.as_str();
        let mut wins = 0.0f64;
        for rj in manifest.renditions() {
            let j = rj.rendition_id.as_str();
            if j == i || rj.scene_id != ri.scene_id {
                continue;
            }
            for &voter in &voters {
                let latest = votes
                    .iter()
                    .filter(|v| !v.honeypot && v.voter_id == voter)
                    .filter(|v| (v.left == i && v.right == j) || (v.left == j && v.right == i))
                    .max_by(|a, b| (a.timestamp, &a.vote_id).cmp(&(b.timestamp, &b.vote_id)));
                if let Some(v) = latest {
                    let winner = match v.choice {
                        Choice::Left => Some(&v.left),
                        Choice::Right => Some(&v.right),
                        Choice::Same => None,
                    };
                    if winner.map(String::as_str) == Some(i) {
                        wins += 1.0;
                    }
                }
            }
        }
        let s = if n * t == 0 { 0.0 } else { wins / (n * t) as f64 };
        rend.insert(i.to_string(), s);
    }
    let mut per_sol: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for r in manifest.renditions() {
        per_sol
            .entry(r.solution_id.clone())
            .or_default()
            .push((r.scene_id.clone(), rend[&r.rendition_id]));
    }
    let sols = per_sol
        .into_iter()
        .map(|(s, mut v)| {
            v.sort_by(|a, b| a.0.cmp(&b.0));
            let mean = v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
            (s, mean)
        })
        .collect();
    (rend, sols)
}

/// Adds a failed honeypot for each listed voter at a random point in time.
pub fn plant_violations(votes: &mut Vec<VoteRecord>, manifest: &Manifest, who: &[String], r: &mut impl Rng) {
    for (k, voter) in who.iter().enumerate() {
        let id = &manifest.renditions()[r.random_range(0..manifest.renditions().len())].rendition_id;
        votes.push(VoteRecord {
            vote_id: format!("hp{k}"),
            left: id.clone(),
            right: id.clone(),
            voter_id: voter.clone(),
            choice: if r.random_bool(0.5) { Choice::Left } else { Choice::Right },
            honeypot: true,
            timestamp: r.random_range(0..20),
        });
    }
}
