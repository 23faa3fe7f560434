mod calibrate;
mod inputs;
mod render;
mod score;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nightisp::evalstudy::ScoreMode;

#[derive(Parser, Debug)]
#[command(name = "nightisp", version, about = "Night-photography ISP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render raw frames (16-bit PNG + JSON sidecar) to display images.
    Render(RenderArgs),
    /// Time a pipeline over a set of frames.
    Bench(BenchArgs),
    /// Build a lens-shading gain map from flat-field white frames.
    Calibrate(CalibrateArgs),
    /// Score a pairwise study and build the leaderboards.
    Score(ScoreArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Check a pipeline spec without running it.
    Validate(ValidateArgs),
    /// List shipped presets, or print one as JSON.
    Presets { name: Option<String> },
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Shipped preset name or path to a pipeline spec JSON file.
    #[arg(long, default_value = "baseline")]
    preset: String,
    /// Parameter override, `stage.param=value` (repeatable).
    #[arg(long = "set", value_name = "STAGE.PARAM=VALUE")]
    overrides: Vec<String>,
    /// Output canvas, e.g. 1024x768.
    #[arg(long, value_name = "WxH")]
    size: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Mosaic PNG files or glob patterns.
    inputs: Vec<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Lens-shading gain map from `calibrate`.
    #[arg(long)]
    gain_map: Option<PathBuf>,
    /// Parallel renders; defaults to the number of logical cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Render through a running service instead of in-process.
    #[arg(long, value_name = "URL")]
    server: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    inputs: Vec<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Run images one at a time (the default; overrides --concurrent).
    #[arg(long)]
    timing_strict: bool,
    /// Time distinct images on separate threads.
    #[arg(long)]
    concurrent: bool,
    #[arg(long)]
    gain_map: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON summary here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// White calibration frames (PNG files or glob patterns).
    inputs: Vec<String>,
    #[arg(long, default_value = "gain_map.json")]
    out: PathBuf,
    /// Smoothing σ in mosaic pixels.
    #[arg(long, default_value_t = 16.0)]
    sigma: f32,
    /// Largest gain applied anywhere.
    #[arg(long, default_value_t = 4.0)]
    cap: f32,
    /// Largest stored grid per CFA site plane.
    #[arg(long, default_value = "64x48", value_name = "WxH")]
    grid: String,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Vote log (JSON lines).
    #[arg(long)]
    votes: PathBuf,
    /// Rendition manifest (JSON array).
    #[arg(long)]
    manifest: PathBuf,
    /// Seconds per solution (JSON object; `"inf"` for untimed).
    #[arg(long)]
    times: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    top_voters: f64,
    #[arg(long, value_enum, default_value = "literal")]
    mode: Mode,
    /// Count "same" answers as half a win for each side.
    #[arg(long)]
    same_half: bool,
    /// Print the efficiency table (needs --times).
    #[arg(long)]
    efficiency: bool,
    /// Directory for scores.json / leaderboard.json / efficiency.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "URL")]
    server: Option<String>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum Mode {
    Literal,
    Observed,
}

impl From<Mode> for ScoreMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Literal => ScoreMode::Literal,
            Mode::Observed => ScoreMode::Observed,
        }
    }
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    #[arg(long, default_value_t = 0.1)]
    honeypot_rate: f64,
    /// Rendition manifest; omit to serve only the stateless endpoints.
    #[arg(long, value_name = "MANIFEST")]
    images: Option<PathBuf>,
    #[arg(long, default_value = "votes.jsonl")]
    store: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    top_voters: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_name = "URL")]
    server: Option<String>,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or arguments (exit 2).
    Usage(String),
    /// The work itself failed (exit 1).
    Failed(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Failed(_) => 1,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => render::render(a),
        Command::Bench(a) => render::bench(a),
        Command::Calibrate(a) => calibrate::calibrate(a),
        Command::Score(a) => score::score(a),
        Command::Serve(a) => serve::serve(a),
        Command::Validate(a) => render::validate(a),
        Command::Presets { name } => render::presets(name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Failed(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
