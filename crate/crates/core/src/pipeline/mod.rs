//! Declarative stage composition, timed execution and benchmarking.
//!
//! A [`PipelineSpec`] is plain data: an ordered list of stage ids with
//! parameter maps plus an output canvas. A [`Registry`] turns it into a
//! [`Pipeline`], checking every parameter and the chain of data spaces
//! (raw → mosaic → camera RGB → … → encoded sRGB) before anything runs.
//!
//! Only stage execution is timed. Decoding the raw file and encoding the
//! result happen outside the clock, so totals cover processing alone.

mod bench;
mod params;
mod presets;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::mosaic::resize_box;
use crate::output::{self, OutputFormat};
use crate::planar::{ChannelStats, ColorSpace, ImageF, MosaicF};
use crate::rawio::{FrameMeta, GainMap, RawFrame};

pub use bench::{bench, median, BenchImage, BenchOptions, BenchStage, BenchSummary};
pub use params::{ensure, ParamReader, ParamResult};
pub use presets::{load_spec, preset, preset_names};

/// Kind of data flowing between stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataSpace {
    Raw,
    Mosaic,
    Image(ColorSpace),
}

impl fmt::Display for DataSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSpace::Raw => f.write_str("raw"),
            DataSpace::Mosaic => f.write_str("mosaic"),
            DataSpace::Image(cs) => cs.fmt(f),
        }
    }
}

impl FromStr for DataSpace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(DataSpace::Raw),
            "mosaic" => Ok(DataSpace::Mosaic),
            other => serde_json::from_value(Value::String(other.into()))
                .map(DataSpace::Image)
                .map_err(|_| format!("unknown data space `{other}`")),
        }
    }
}

impl Serialize for DataSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DataSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub width: usize,
    pub height: usize,
    pub format: OutputFormat,
    pub quality: u8,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            width: 1024,
            height: 768,
            format: OutputFormat::Jpeg,
            quality: 95,
        }
    }
}

impl OutputSpec {
    /// The canvas in the orientation of a `w × h` image: portrait images get
    /// the long side vertical.
    pub fn canvas_for(&self, w: usize, h: usize) -> (usize, usize) {
        let long = self.width.max(self.height);
        let short = self.width.min(self.height);
        if h > w {
            (short, long)
        } else {
            (long, short)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub stage_id: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl StageSpec {
    pub fn new(stage_id: impl Into<String>) -> Self {
        StageSpec {
            stage_id: stage_id.into(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub name: String,
    pub stages: Vec<StageSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl PipelineSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Param(format!("pipeline spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    /// Sets `stage_id.param` on the first stage with that id. `value` is
    /// read as JSON when it parses, otherwise as a string.
    pub fn set_override(&mut self, key: &str, value: &str) -> Result<()> {
        let (stage_id, param) = key
            .split_once('.')
            .ok_or_else(|| Error::Param(format!("override `{key}` must look like stage.param")))?;
        let stage = self
            .stages
            .iter_mut()
            .find(|s| s.stage_id == stage_id)
            .ok_or_else(|| Error::Param(format!("no stage `{stage_id}` in pipeline `{}`", self.name)))?;
        let v = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
        stage.params.insert(param.into(), v);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecErrorKind {
    UnknownStage,
    BadParam(String),
    SpaceChain { expected: String, found: DataSpace },
    FinalSpace(DataSpace),
    Output(String),
}

impl fmt::Display for SpecErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecErrorKind::UnknownStage => f.write_str("unknown stage"),
            SpecErrorKind::BadParam(m) => write!(f, "bad parameter: {m}"),
            SpecErrorKind::SpaceChain { expected, found } => {
                write!(f, "space chain broken: expects {expected}, receives {found}")
            }
            SpecErrorKind::FinalSpace(s) => write!(f, "pipeline must end in srgb_encoded, ends in {s}"),
            SpecErrorKind::Output(m) => write!(f, "bad output settings: {m}"),
        }
    }
}

/// First problem found in a spec, with the index of the offending stage.
/// Problems with the pipeline as a whole use `index == stages.len()`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("pipeline spec error at stage {index} ({stage_id}): {kind}")]
pub struct SpecError {
    pub index: usize,
    pub stage_id: String,
    pub kind: SpecErrorKind,
}

/// Data handed from stage to stage.
pub enum Work<'a> {
    Raw(&'a RawFrame),
    Mosaic(MosaicF),
    Image(ImageF),
}

impl Work<'_> {
    pub fn space(&self) -> DataSpace {
        match self {
            Work::Raw(_) => DataSpace::Raw,
            Work::Mosaic(_) => DataSpace::Mosaic,
            Work::Image(img) => DataSpace::Image(img.space()),
        }
    }

    pub fn stats(&self) -> Vec<ChannelStats> {
        match self {
            Work::Raw(r) => {
                let v: Vec<f32> = r.samples().iter().map(|&s| s as f32).collect();
                vec![ChannelStats::of(&v)]
            }
            Work::Mosaic(m) => vec![ChannelStats::of(m.data())],
            Work::Image(img) => img.channel_stats(),
        }
    }
}

/// Per-frame inputs that stages may consult.
pub struct RunContext<'a> {
    pub meta: &'a FrameMeta,
    pub seed: u64,
    pub gain_map: Option<&'a GainMap>,
}

pub trait Stage: Send + Sync {
    /// Output space produced from `input`, or `None` when `input` is not accepted.
    fn output_space(&self, input: DataSpace) -> Option<DataSpace>;

    /// Human-readable description of accepted inputs, for error messages.
    fn expects(&self) -> String;

    fn apply<'a>(&self, input: Work<'a>, ctx: &RunContext<'_>) -> Result<Work<'a>>;
}

pub type StageFactory =
    Arc<dyn Fn(&mut ParamReader<'_>, &OutputSpec) -> ParamResult<Box<dyn Stage>> + Send + Sync>;

/// String-keyed stage constructors.
#[derive(Clone, Default)]
pub struct Registry {
    factories: BTreeMap<String, StageFactory>,
}

static BUILTINS: LazyLock<Registry> = LazyLock::new(Registry::with_builtins);

pub fn builtin_registry() -> &'static Registry {
    &BUILTINS
}

/// Checks `spec` against the built-in registry.
pub fn validate(spec: &PipelineSpec) -> std::result::Result<(), SpecError> {
    BUILTINS.validate(spec)
}

/// Compiles `spec` against the built-in registry.
pub fn compile(spec: &PipelineSpec) -> std::result::Result<Pipeline, SpecError> {
    BUILTINS.compile(spec)
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Registry::new();
        stages::register_builtins(&mut r);
        r
    }

    pub fn register(
        &mut self,
        stage_id: impl Into<String>,
        factory: impl Fn(&mut ParamReader<'_>, &OutputSpec) -> ParamResult<Box<dyn Stage>> + Send + Sync + 'static,
    ) {
        self.factories.insert(stage_id.into(), Arc::new(factory));
    }

    pub fn contains(&self, stage_id: &str) -> bool {
        self.factories.contains_key(stage_id)
    }

    pub fn stage_ids(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn validate(&self, spec: &PipelineSpec) -> std::result::Result<(), SpecError> {
        self.compile(spec).map(|_| ())
    }

    pub fn compile(&self, spec: &PipelineSpec) -> std::result::Result<Pipeline, SpecError> {
        let mut space = DataSpace::Raw;
        let mut compiled = Vec::with_capacity(spec.stages.len());
        for (index, s) in spec.stages.iter().enumerate() {
            let err = |kind| SpecError {
                index,
                stage_id: s.stage_id.clone(),
                kind,
            };
            let factory = self
                .factories
                .get(&s.stage_id)
                .ok_or_else(|| err(SpecErrorKind::UnknownStage))?;
            let mut reader = ParamReader::new(&s.params);
            let stage = factory(&mut reader, &spec.output).map_err(|m| err(SpecErrorKind::BadParam(m)))?;
            reader.finish().map_err(|m| err(SpecErrorKind::BadParam(m)))?;
            space = stage.output_space(space).ok_or_else(|| {
                err(SpecErrorKind::SpaceChain {
                    expected: stage.expects(),
                    found: space,
                })
            })?;
            compiled.push((s.stage_id.clone(), stage));
        }
        let whole = |kind| SpecError {
            index: spec.stages.len(),
            stage_id: "output".into(),
            kind,
        };
        if space != DataSpace::Image(ColorSpace::SrgbEncoded) {
            return Err(whole(SpecErrorKind::FinalSpace(space)));
        }
        let out = &spec.output;
        if out.width < 2 || out.height < 2 {
            return Err(whole(SpecErrorKind::Output(format!(
                "canvas {}x{} is smaller than 2x2",
                out.width, out.height
            ))));
        }
        if !(1..=100).contains(&out.quality) {
            return Err(whole(SpecErrorKind::Output(format!(
                "quality {} outside 1..=100",
                out.quality
            ))));
        }
        Ok(Pipeline {
            name: spec.name.clone(),
            stages: compiled,
            output: spec.output.clone(),
        })
    }
}

/// Timing and output statistics of one executed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage_id: String,
    /// Seconds, from a monotonic clock.
    pub wall_time: f64,
    pub space: DataSpace,
    pub stats: Vec<ChannelStats>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub image: ImageF,
    pub reports: Vec<StageReport>,
    /// Sum of the stage wall times.
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub seed: u64,
    pub gain_map: Option<&'a GainMap>,
}

/// Report id of the implicit resize to the output canvas.
pub const FIT_CANVAS: &str = "fit_canvas";

/// A validated, ready-to-run pipeline.
pub struct Pipeline {
    name: String,
    stages: Vec<(String, Box<dyn Stage>)>,
    output: OutputSpec,
}

impl Pipeline {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn output(&self) -> &OutputSpec {
        &self.output
    }

    pub fn stage_ids(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().map(|(id, _)| id.as_str())
    }

    /// Runs every stage on `raw`, timing each one. If the final image does
    /// not already match the output canvas, a timed `fit_canvas` resize is
    /// appended.
    pub fn run(&self, raw: &RawFrame, opts: &RunOptions<'_>) -> Result<RunOutput> {
        let ctx = RunContext {
            meta: &raw.meta,
            seed: opts.seed,
            gain_map: opts.gain_map,
        };
        let mut reports = Vec::with_capacity(self.stages.len() + 1);
        let mut work = Work::Raw(raw);
        for (index, (stage_id, stage)) in self.stages.iter().enumerate() {
            let start = Instant::now();
            let next = stage.apply(work, &ctx).map_err(|e| Error::Stage {
                index,
                stage_id: stage_id.clone(),
                source: Box::new(e),
            })?;
            let wall_time = start.elapsed().as_secs_f64();
            reports.push(StageReport {
                stage_id: stage_id.clone(),
                wall_time,
                space: next.space(),
                stats: next.stats(),
            });
            work = next;
        }
        let Work::Image(mut image) = work else {
            return Err(Error::Stage {
                index: self.stages.len(),
                stage_id: FIT_CANVAS.into(),
                source: Box::new(Error::Dimension("pipeline did not produce an image".into())),
            });
        };
        let (cw, ch) = self.output.canvas_for(image.width(), image.height());
        if (image.width(), image.height()) != (cw, ch) {
            let start = Instant::now();
            image = resize_box(&image, cw, ch)?;
            let wall_time = start.elapsed().as_secs_f64();
            reports.push(StageReport {
                stage_id: FIT_CANVAS.into(),
                wall_time,
                space: DataSpace::Image(image.space()),
                stats: image.channel_stats(),
            });
        }
        let total_seconds = reports.iter().map(|r| r.wall_time).sum();
        Ok(RunOutput {
            image,
            reports,
            total_seconds,
        })
    }

    /// Runs the pipeline and encodes the result in the configured format.
    pub fn render(&self, raw: &RawFrame, opts: &RunOptions<'_>) -> Result<(Vec<u8>, RunOutput)> {
        let out = self.run(raw, opts)?;
        let bytes = output::encode(&out.image, self.output.format, self.output.quality)?;
        Ok((bytes, out))
    }

    pub fn extension(&self) -> &'static str {
        self.output.format.extension()
    }
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("name", &self.name)
            .field("stages", &self.stages.iter().map(|(id, _)| id).collect::<Vec<_>>())
            .field("output", &self.output)
            .finish()
    }
}
