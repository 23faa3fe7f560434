use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::VoteRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendOutcome {
    Appended,
    /// A vote with the same `vote_id` is already stored; nothing was written.
    Duplicate,
}

/// Append-only JSON-lines vote log. Each append is flushed and synced to
/// disk before it returns.
#[derive(Debug)]
pub struct VoteStore {
    path: PathBuf,
    file: File,
    ids: HashSet<String>,
    votes: Vec<VoteRecord>,
}

impl VoteStore {
    /// Opens (creating if needed) the log at `path` and loads its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut votes = Vec::new();
        let mut ids = HashSet::new();
        if path.exists() {
            let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let v: VoteRecord = serde_json::from_str(&line)
                    .map_err(|e| Error::Store(format!("{} line {}: {e}", path.display(), n + 1)))?;
                ids.insert(v.vote_id.clone());
                votes.push(v);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(VoteStore { path, file, ids, votes })
    }

    pub fn append(&mut self, vote: VoteRecord) -> Result<AppendOutcome> {
        if self.ids.contains(&vote.vote_id) {
            return Ok(AppendOutcome::Duplicate);
        }
        let mut line = serde_json::to_string(&vote).map_err(|e| Error::Store(e.to_string()))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.ids.insert(vote.vote_id.clone());
        self.votes.push(vote);
        Ok(AppendOutcome::Appended)
    }

    pub fn contains(&self, vote_id: &str) -> bool {
        self.ids.contains(vote_id)
    }

    pub fn votes(&self) -> &[VoteRecord] {
        &self.votes
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Reads a vote log without opening it for writing.
pub fn read_votes(path: impl AsRef<Path>) -> Result<Vec<VoteRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::Store(format!("{} line {}: {e}", path.display(), n + 1)))
        })
        .collect()
}
