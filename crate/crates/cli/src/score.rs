use std::path::Path;

use nightisp::evalstudy::{self, EvalOptions, Leaderboard, LeaderboardEntry, Manifest, ScoreTable};
use nightisp::wire::ScoreRequest;
use nightisp_client::Client;

use crate::{CmdResult, Failure, ScoreArgs};

fn failed(e: impl std::fmt::Display) -> Failure {
    Failure::Failed(e.to_string())
}

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> CmdResult {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(v).map_err(failed)?;
    std::fs::write(&path, text + "\n").map_err(|e| failed(format!("{}: {e}", path.display())))
}

fn rows(title: &str, entries: &[LeaderboardEntry], rank: impl Fn(&LeaderboardEntry) -> usize) -> String {
    let width = entries.iter().map(|e| e.solution_id.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{title}\n{:>4}  {:<width$}  {:>6}  {:>10}\n", "rank", "solution", "score", "time (s)");
    for e in entries {
        out.push_str(&format!(
            "{:>4}  {:<width$}  {:>6.2}  {:>10}\n",
            rank(e),
            e.solution_id,
            e.mean_score,
            e.time_seconds
        ));
    }
    out
}

pub fn score(args: ScoreArgs) -> CmdResult {
    if args.efficiency && args.times.is_none() {
        return Err(Failure::Usage("--efficiency needs --times".into()));
    }
    if !(args.top_voters > 0.0 && args.top_voters <= 1.0) {
        return Err(Failure::Usage(format!("--top-voters must be in (0, 1], got {}", args.top_voters)));
    }
    let votes = evalstudy::read_votes(&args.votes).map_err(failed)?;
    let manifest = Manifest::load(&args.manifest).map_err(failed)?;
    let times = args.times.as_ref().map(evalstudy::load_times).transpose().map_err(failed)?;
    let options = EvalOptions {
        top_voters: args.top_voters,
        mode: args.mode.into(),
        same_counts_half: args.same_half,
    };

    let (table, board): (ScoreTable, Option<Leaderboard>) = match &args.server {
        Some(url) => {
            let client = Client::new(url.clone()).map_err(failed)?;
            let resp = client
                .score(&ScoreRequest {
                    votes,
                    manifest: manifest.renditions().to_vec(),
                    options,
                    times,
                })
                .map_err(failed)?;
            (resp.scores, resp.leaderboard)
        }
        None => {
            let table = evalstudy::evaluate(&votes, &manifest, &options).map_err(failed)?;
            let board = times.as_ref().map(|t| evalstudy::leaderboard(&table, t)).transpose().map_err(failed)?;
            (table, board)
        }
    };

    match &board {
        Some(b) => {
            print!("{}", rows("quality", &b.quality, |e| e.quality_rank));
            if args.efficiency {
                print!(
                    "\n{}",
                    rows("efficiency (quality top 5 by time)", &b.efficiency, |e| e.efficiency_rank.unwrap_or(0))
                );
            }
        }
        None => {
            let mut scores = table.solution_scores();
            scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (i, (id, s)) in scores.iter().enumerate() {
                println!("{:>4}  {id}  {s:.4}", i + 1);
            }
        }
    }
    if !table.banned_voters.is_empty() {
        eprintln!("banned voters: {}", table.banned_voters.iter().cloned().collect::<Vec<_>>().join(", "));
    }

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
        write_json(dir, "scores.json", &table)?;
        if let Some(b) = &board {
            write_json(dir, "leaderboard.json", b)?;
            if args.efficiency {
                write_json(dir, "efficiency.json", &b.efficiency)?;
            }
        }
    }
    Ok(())
}
