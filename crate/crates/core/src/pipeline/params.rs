use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Typed access to one stage's parameter map. Every key read is recorded so
/// that [`ParamReader::finish`] can reject keys nobody asked for.
pub struct ParamReader<'a> {
    map: &'a Map<String, Value>,
    used: BTreeSet<&'a str>,
}

pub type ParamResult<T> = std::result::Result<T, String>;

impl<'a> ParamReader<'a> {
    pub fn new(map: &'a Map<String, Value>) -> Self {
        ParamReader {
            map,
            used: BTreeSet::new(),
        }
    }

    pub fn get<T: DeserializeOwned>(&mut self, key: &str) -> ParamResult<Option<T>> {
        let Some((k, v)) = self.map.get_key_value(key) else {
            return Ok(None);
        };
        self.used.insert(k.as_str());
        if v.is_null() {
            return Ok(None);
        }
        serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| format!("parameter `{key}`: {e}"))
    }

    pub fn or<T: DeserializeOwned>(&mut self, key: &str, default: T) -> ParamResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn required<T: DeserializeOwned>(&mut self, key: &str) -> ParamResult<T> {
        self.get(key)?
            .ok_or_else(|| format!("missing required parameter `{key}`"))
    }

    pub fn finish(self) -> ParamResult<()> {
        let unknown: Vec<&str> = self
            .map
            .keys()
            .map(String::as_str)
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(format!("unknown parameter(s): {}", unknown.join(", ")))
        }
    }
}

/// Fails with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> ParamResult<()> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
