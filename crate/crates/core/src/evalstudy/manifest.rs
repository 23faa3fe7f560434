use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendition {
    pub rendition_id: String,
    pub solution_id: String,
    pub scene_id: String,
    pub image_path: PathBuf,
}

/// The set of renditions under study.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    renditions: Vec<Rendition>,
    index: HashMap<String, usize>,
}

impl Manifest {
    /// Rejects duplicate rendition ids and duplicate (solution, scene) pairs.
    pub fn new(renditions: Vec<Rendition>) -> Result<Self> {
        let mut index = HashMap::with_capacity(renditions.len());
        let mut cells = BTreeSet::new();
        for (i, r) in renditions.iter().enumerate() {
            if r.rendition_id.is_empty() {
                return Err(Error::Manifest(format!("entry {i} has an empty rendition_id")));
            }
            if index.insert(r.rendition_id.clone(), i).is_some() {
                return Err(Error::Manifest(format!("duplicate rendition_id `{}`", r.rendition_id)));
            }
            if !cells.insert((r.solution_id.as_str(), r.scene_id.as_str())) {
                return Err(Error::Manifest(format!(
                    "solution `{}` has two renditions of scene `{}`",
                    r.solution_id, r.scene_id
                )));
            }
        }
        Ok(Manifest { renditions, index })
    }

    /// Reads a JSON list of renditions. Relative image paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut list: Vec<Rendition> =
            serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut list {
            if r.image_path.is_relative() {
                r.image_path = base.join(&r.image_path);
            }
        }
        Manifest::new(list)
    }

    pub fn check_paths(&self) -> Result<()> {
        for r in &self.renditions {
            if !r.image_path.is_file() {
                return Err(Error::Manifest(format!(
                    "image for `{}` not found at {}",
                    r.rendition_id,
                    r.image_path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn renditions(&self) -> &[Rendition] {
        &self.renditions
    }

    pub fn get(&self, rendition_id: &str) -> Option<&Rendition> {
        self.index.get(rendition_id).map(|&i| &self.renditions[i])
    }

    pub fn solutions(&self) -> BTreeSet<&str> {
        self.renditions.iter().map(|r| r.solution_id.as_str()).collect()
    }

    /// Rendition ids grouped by scene, both in sorted order.
    pub fn scenes(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in &self.renditions {
            out.entry(&r.scene_id).or_default().push(&r.rendition_id);
        }
        for v in out.values_mut() {
            v.sort_unstable();
        }
        out
    }
}
