use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nightisp::pipeline::{self, BenchOptions, Pipeline, PipelineSpec, RunOptions};
use nightisp::rawio::{self, GainMap, RawFrame};
use nightisp::wire::PipelineSource;
use nightisp_client::Client;

use crate::inputs::{expand, parse_size};
use crate::{BenchArgs, CmdResult, Failure, PipelineArgs, RenderArgs, ValidateArgs};

/// Loads the preset, applies overrides and size, and checks the result.
fn build_spec(args: &PipelineArgs) -> Result<PipelineSpec, Failure> {
    let mut spec = pipeline::load_spec(&args.preset).map_err(|e| Failure::Usage(e.to_string()))?;
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("override `{o}` must look like stage.param=value")))?;
        spec.set_override(k.trim(), v.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(size) = &args.size {
        let (w, h) = parse_size(size)?;
        spec.output.width = w;
        spec.output.height = h;
    }
    Ok(spec)
}

fn compile(spec: &PipelineSpec) -> Result<Pipeline, Failure> {
    pipeline::compile(spec).map_err(|e| Failure::Usage(e.to_string()))
}

fn load_gain_map(path: Option<&Path>) -> Result<Option<GainMap>, Failure> {
    path.map(|p| GainMap::load(p).map_err(|e| Failure::Usage(format!("gain map: {e}"))))
        .transpose()
}

fn load_frame(path: &Path) -> nightisp::Result<RawFrame> {
    rawio::load_raw(path, rawio::sidecar_path(path))
}

enum Backend<'a> {
    Local {
        pipeline: &'a Pipeline,
        opts: RunOptions<'a>,
    },
    Remote {
        client: Client,
        spec: &'a PipelineSpec,
        seed: u64,
    },
}

impl Backend<'_> {
    /// Renders one input and writes `<frame_id>.<ext>` into `out`.
    fn render_one(&self, input: &Path, out: &Path) -> Result<PathBuf, String> {
        let (frame_id, ext, bytes) = match self {
            Backend::Local { pipeline, opts } => {
                let raw = load_frame(input).map_err(|e| e.to_string())?;
                let (bytes, _) = pipeline.render(&raw, opts).map_err(|e| e.to_string())?;
                (raw.meta.frame_id.clone(), pipeline.extension(), bytes)
            }
            Backend::Remote { client, spec, seed } => {
                let png = std::fs::read(input).map_err(|e| e.to_string())?;
                let side = rawio::sidecar_path(input);
                let sidecar = std::fs::read_to_string(&side).map_err(|e| format!("{}: {e}", side.display()))?;
                let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let mut req =
                    nightisp_client::render_request(&stem, &png, &sidecar, PipelineSource::Spec { spec: (*spec).clone() });
                req.seed = *seed;
                let (bytes, resp) = client.render_bytes(&req).map_err(|e| e.to_string())?;
                (resp.frame_id, resp.format.extension(), bytes)
            }
        };
        let path = out.join(format!("{frame_id}.{ext}"));
        std::fs::write(&path, bytes).map_err(|e| format!("writing {}: {e}", path.display()))?;
        Ok(path)
    }
}

pub fn render(args: RenderArgs) -> CmdResult {
    let spec = build_spec(&args.pipeline)?;
    let pipeline = compile(&spec)?;
    if args.server.is_some() && args.gain_map.is_some() {
        return Err(Failure::Usage("--gain-map cannot be sent to a server".into()));
    }
    let gain_map = load_gain_map(args.gain_map.as_deref())?;
    let inputs = expand(&args.inputs)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Failed(format!("{}: {e}", args.out.display())))?;

    let backend = match &args.server {
        Some(url) => Backend::Remote {
            client: Client::new(url.clone()).map_err(|e| Failure::Failed(e.to_string()))?,
            spec: &spec,
            seed: args.pipeline.seed,
        },
        None => Backend::Local {
            pipeline: &pipeline,
            opts: RunOptions {
                seed: args.pipeline.seed,
                gain_map: gain_map.as_ref(),
            },
        },
    };

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, inputs.len());
    let results: Vec<Mutex<Option<Result<PathBuf, String>>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= inputs.len() {
                    break;
                }
                let r = backend.render_one(&inputs[i], &args.out);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });

    let mut failed = Vec::new();
    for (input, r) in inputs.iter().zip(results) {
        match r.into_inner().unwrap().expect("every input is rendered") {
            Ok(out) => println!("{} -> {}", input.display(), out.display()),
            Err(e) => failed.push(format!("  {}: {e}", input.display())),
        }
    }
    if failed.is_empty() {
        return Ok(());
    }
    Err(Failure::Failed(format!(
        "{} of {} inputs failed:\n{}",
        failed.len(),
        inputs.len(),
        failed.join("\n")
    )))
}

pub fn bench(args: BenchArgs) -> CmdResult {
    let spec = build_spec(&args.pipeline)?;
    let pipeline = compile(&spec)?;
    let gain_map = load_gain_map(args.gain_map.as_deref())?;
    let inputs = expand(&args.inputs)?;
    let mut raws = Vec::with_capacity(inputs.len());
    for p in &inputs {
        raws.push(load_frame(p).map_err(|e| Failure::Failed(format!("{}: {e}", p.display())))?);
    }
    if args.repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    if args.timing_strict && args.concurrent {
        tracing::warn!("--timing-strict given; ignoring --concurrent");
    }
    let opts = BenchOptions {
        repeats: args.repeats,
        concurrent: args.concurrent && !args.timing_strict,
        seed: args.pipeline.seed,
        gain_map: gain_map.as_ref(),
    };
    let summary = pipeline::bench(&raws, &pipeline, &opts).map_err(|e| Failure::Failed(e.to_string()))?;
    if args.json {
        println!("{}", summary.to_json());
    } else {
        print!("{}", summary.to_table());
    }
    if let Some(out) = &args.out {
        std::fs::write(out, summary.to_json()).map_err(|e| Failure::Failed(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

pub fn validate(args: ValidateArgs) -> CmdResult {
    let spec = build_spec(&args.pipeline)?;
    match &args.server {
        Some(url) => {
            let client = Client::new(url.clone()).map_err(|e| Failure::Failed(e.to_string()))?;
            let resp = client
                .validate(&PipelineSource::Spec { spec })
                .map_err(|e| Failure::Failed(e.to_string()))?;
            if resp.ok {
                println!("ok");
                Ok(())
            } else {
                Err(Failure::Usage(resp.error.unwrap_or_else(|| "invalid".into())))
            }
        }
        None => {
            let p = compile(&spec)?;
            println!("ok: {} ({} stages)", p.name(), p.stage_ids().count());
            Ok(())
        }
    }
}

pub fn presets(name: Option<String>) -> CmdResult {
    match name {
        None => {
            for n in pipeline::preset_names() {
                println!("{n}");
            }
            Ok(())
        }
        Some(n) => {
            let spec = pipeline::preset(&n).ok_or_else(|| Failure::Usage(format!("no preset `{n}`")))?;
            println!("{}", spec.to_json());
            Ok(())
        }
    }
}
