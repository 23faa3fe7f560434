use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::Failure;

/// Expands file paths and glob patterns into a sorted, de-duplicated list.
pub fn expand(patterns: &[String]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = BTreeSet::new();
    for p in patterns {
        let paths = glob::glob(p).map_err(|e| Failure::Usage(format!("bad pattern `{p}`: {e}")))?;
        for entry in paths {
            match entry {
                Ok(path) if path.is_file() => {
                    out.insert(path);
                }
                Ok(_) => {}
                Err(e) => return Err(Failure::Failed(format!("reading {}: {}", e.path().display(), e.error()))),
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::Failed("no inputs".into()));
    }
    Ok(out.into_iter().collect())
}

/// Parses `WxH`.
pub fn parse_size(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("size must look like 1024x768, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}
