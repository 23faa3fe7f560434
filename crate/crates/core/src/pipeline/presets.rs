use std::path::Path;

use crate::error::{Error, Result};

use super::PipelineSpec;

const SHIPPED: &[(&str, &str)] = &[
    ("baseline", include_str!("../../presets/baseline.json")),
    ("ivl", include_str!("../../presets/ivl.json")),
    ("ozu", include_str!("../../presets/ozu.json")),
    ("mialgo-classical", include_str!("../../presets/mialgo-classical.json")),
    ("polyu-classical", include_str!("../../presets/polyu-classical.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Option<PipelineSpec> {
    SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| PipelineSpec::from_json(text).expect("shipped preset parses"))
}

/// A shipped preset by name, or a spec file by path.
pub fn load_spec(name_or_path: &str) -> Result<PipelineSpec> {
    if let Some(spec) = preset(name_or_path) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::Param(format!(
            "no preset or spec file named `{name_or_path}` (shipped: {})",
            preset_names().collect::<Vec<_>>().join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PipelineSpec::from_json(&text)
}
