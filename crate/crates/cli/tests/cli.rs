use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use nightisp::evalstudy::{self, Choice, EvalOptions, Manifest, Rendition, VoteRecord};
use nightisp::rawio::{self, FrameMeta, GainMap, Orientation, RawFrame};

const STANDINGS: [(&str, f64); 9] = [
    ("DH-AISP", 16.3),
    ("MiAlgo", 1.5),
    ("IVLTeam", 5.8),
    ("SCBC", 3.2),
    ("Manual", f64::INFINITY),
    ("IIR-Lab", 23.0),
    ("PolyuColor", 3.1),
    ("OzUVGL", 144.8),
    ("baseline", 23.0),
];

fn nightisp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nightisp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn meta(id: &str) -> FrameMeta {
    FrameMeta {
        black_level: 1024.0,
        white_level: 16383.0,
        as_shot_neutral: [0.5, 1.0, 0.6],
        cst: [
            [0.4124564, 0.3575761, 0.1804375],
            [0.2126729, 0.7151522, 0.0721750],
            [0.0193339, 0.1191920, 0.9503041],
        ],
        orientation: Orientation::Normal,
        noise_profile: None,
        frame_id: id.into(),
    }
}

fn write_frame(dir: &Path, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> PathBuf {
    let samples = (0..w * h).map(|i| f(i % w, i / w)).collect();
    let raw = RawFrame::new(w, h, samples, "RGGB".parse().unwrap(), meta(name)).unwrap();
    let png = dir.join(format!("{name}.png"));
    rawio::save_raw(&raw, &png).unwrap();
    png
}

fn scene(dir: &Path, name: &str) -> PathBuf {
    write_frame(dir, name, 128, 96, |x, y| (1200 + (x * 37 + y * 53) % 9000) as u16)
}

fn outputs(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn render_writes_one_image_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    scene(dir.path(), "night_1");
    let o = nightisp(&[
        "render",
        dir.path().join("*.png").to_str().unwrap(),
        "--size",
        "64x48",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(outputs(&out), ["night_1.jpg"]);
    assert_eq!(&std::fs::read(out.join("night_1.jpg")).unwrap()[..2], &[0xFF, 0xD8]);
}

#[test]
fn render_with_no_matches_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = nightisp(&["render", dir.path().join("*.png").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no inputs"), "{}", stderr(&o));
}

#[test]
fn one_corrupt_frame_does_not_stop_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    scene(dir.path(), "a");
    scene(dir.path(), "c");
    let bad = scene(dir.path(), "b");
    let bytes = std::fs::read(&bad).unwrap();
    std::fs::write(&bad, &bytes[..bytes.len() / 3]).unwrap();
    let o = nightisp(&[
        "render",
        dir.path().join("*.png").to_str().unwrap(),
        "--size",
        "64x48",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(outputs(&out), ["a.jpg", "c.jpg"]);
    let err = stderr(&o);
    assert!(err.contains("b.png") && err.contains("1 of 3"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene(dir.path(), "x");
    let p = png.to_str().unwrap();
    assert_eq!(nightisp(&["render", p, "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(nightisp(&["render", p, "--size", "big"]).status.code(), Some(2));
    assert_eq!(nightisp(&["render", p, "--set", "nonsense"]).status.code(), Some(2));
    assert_eq!(nightisp(&["presets", "nope"]).status.code(), Some(2));
    assert_eq!(nightisp(&["frobnicate"]).status.code(), Some(2));
}

fn preset_names() -> Vec<String> {
    let o = nightisp(&["presets"]);
    assert!(o.status.success());
    String::from_utf8(o.stdout).unwrap().lines().map(String::from).collect()
}

#[test]
fn renders_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path(), "f");
    let glob = dir.path().join("*.png");
    for preset in preset_names() {
        let mut runs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{preset}-{run}"));
            let o = nightisp(&[
                "render",
                glob.to_str().unwrap(),
                "--preset",
                &preset,
                "--size",
                "64x48",
                "--seed",
                "5",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{preset}: {}", stderr(&o));
            let name = outputs(&out).pop().unwrap();
            runs.push(std::fs::read(out.join(name)).unwrap());
        }
        assert_eq!(runs[0], runs[1], "{preset}");
    }
}

#[test]
fn presets_are_listed_and_validate() {
    let names = preset_names();
    assert!(names.contains(&"baseline".to_string()));
    for n in &names {
        let o = nightisp(&["validate", "--preset", n]);
        assert!(o.status.success(), "{n}: {}", stderr(&o));
    }

    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("broken.json");
    let mut spec: serde_json::Value =
        serde_json::from_slice(&nightisp(&["presets", "baseline"]).stdout).unwrap();
    spec["stages"].as_array_mut().unwrap().insert(1, serde_json::json!({"stage_id": "encode_srgb"}));
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    let o = nightisp(&["validate", "--preset", spec_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bench_prints_json_with_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path(), "a");
    scene(dir.path(), "b");
    let o = nightisp(&[
        "bench",
        dir.path().join("*.png").to_str().unwrap(),
        "--size",
        "64x48",
        "--repeats",
        "2",
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["images"].as_array().unwrap().len(), 2);
    assert!(v["seconds_per_image"].as_f64().unwrap() > 0.0);
}

#[test]
fn calibrate_flat_frame_gives_unit_gains() {
    let dir = tempfile::tempdir().unwrap();
    let png = write_frame(dir.path(), "white", 64, 48, |_, _| 9000);
    let map = dir.path().join("map.json");
    let o = nightisp(&["calibrate", png.to_str().unwrap(), "--out", map.to_str().unwrap(), "--sigma", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g = GainMap::load(&map).unwrap();
    assert!(g.planes.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-5), "{:?}", &g.planes[0][..4]);
}

#[test]
fn calibrate_averages_identical_frames_to_the_same_map() {
    let dir = tempfile::tempdir().unwrap();
    let vignette = |x: usize, y: usize| {
        let r2 = (x as f64 - 31.5).powi(2) + (y as f64 - 23.5).powi(2);
        (1024.0 + 12000.0 * (0.012 * r2.sqrt()).cos().powi(4)) as u16
    };
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    std::fs::create_dir_all(&one).unwrap();
    std::fs::create_dir_all(&four).unwrap();
    write_frame(&one, "w0", 64, 48, vignette);
    for k in 0..4 {
        write_frame(&four, &format!("w{k}"), 64, 48, vignette);
    }
    let (m1, m4) = (dir.path().join("m1.json"), dir.path().join("m4.json"));
    for (src, dst) in [(&one, &m1), (&four, &m4)] {
        let o = nightisp(&[
            "calibrate",
            src.join("*.png").to_str().unwrap(),
            "--out",
            dst.to_str().unwrap(),
            "--sigma",
            "4",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (a, b) = (GainMap::load(&m1).unwrap(), GainMap::load(&m4).unwrap());
    assert_eq!(a, b);
    assert!(a.gain_at(0, 0) > 1.2);
}

#[test]
fn calibrate_rejects_mixed_sizes() {
    let dir = tempfile::tempdir().unwrap();
    write_frame(dir.path(), "a", 64, 48, |_, _| 9000);
    write_frame(dir.path(), "b", 32, 24, |_, _| 9000);
    let o = nightisp(&["calibrate", dir.path().join("*.png").to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));
}

/// One scene rendered by every entry in the final standings; each of `voters` voters
/// prefers the higher-listed entry in every pair.
fn write_study(dir: &Path, voters: usize) -> (PathBuf, PathBuf, PathBuf) {
    let renditions: Vec<Rendition> = STANDINGS
        .iter()
        .map(|(s, _)| Rendition {
            rendition_id: format!("{s}/night"),
            solution_id: s.to_string(),
            scene_id: "night".into(),
            image_path: format!("{s}.jpg").into(),
        })
        .collect();
    let mut votes = Vec::new();
    for t in 0..voters {
        for i in 0..STANDINGS.len() {
            for j in i + 1..STANDINGS.len() {
                votes.push(VoteRecord {
                    vote_id: format!("{t}-{i}-{j}"),
                    left: renditions[j].rendition_id.clone(),
                    right: renditions[i].rendition_id.clone(),
                    voter_id: format!("voter{t}"),
                    choice: Choice::Right,
                    honeypot: false,
                    timestamp: 1,
                });
            }
        }
    }
    votes.push(VoteRecord {
        vote_id: "trap".into(),
        left: renditions[0].rendition_id.clone(),
        right: renditions[0].rendition_id.clone(),
        voter_id: "spammer".into(),
        choice: Choice::Left,
        honeypot: true,
        timestamp: 2,
    });
    let manifest = dir.join("manifest.json");
    std::fs::write(&manifest, serde_json::to_string(&renditions).unwrap()).unwrap();
    let log = dir.join("votes.jsonl");
    let lines: Vec<String> = votes.iter().map(|v| serde_json::to_string(v).unwrap()).collect();
    std::fs::write(&log, lines.join("\n") + "\n").unwrap();
    let times = dir.join("times.json");
    let obj: serde_json::Map<String, serde_json::Value> = STANDINGS
        .iter()
        .map(|(s, t)| {
            let v = if t.is_finite() { serde_json::json!(t) } else { serde_json::json!("inf") };
            (s.to_string(), v)
        })
        .collect();
    std::fs::write(&times, serde_json::Value::Object(obj).to_string()).unwrap();
    (log, manifest, times)
}

#[test]
fn score_writes_tables_matching_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (log, manifest, times) = write_study(dir.path(), 3);
    let out = dir.path().join("scores");
    let o = nightisp(&[
        "score",
        "--votes",
        log.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--times",
        times.to_str().unwrap(),
        "--top-voters",
        "1",
        "--efficiency",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("spammer"));

    let table: evalstudy::ScoreTable =
        serde_json::from_str(&std::fs::read_to_string(out.join("scores.json")).unwrap()).unwrap();
    let want = evalstudy::evaluate(
        &evalstudy::read_votes(&log).unwrap(),
        &Manifest::load(&manifest).unwrap(),
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(table, want);

    let board: evalstudy::Leaderboard =
        serde_json::from_str(&std::fs::read_to_string(out.join("leaderboard.json")).unwrap()).unwrap();
    let quality: Vec<&str> = board.quality.iter().map(|e| e.solution_id.as_str()).collect();
    assert_eq!(quality, STANDINGS.map(|r| r.0));
    let eff: Vec<evalstudy::LeaderboardEntry> =
        serde_json::from_str(&std::fs::read_to_string(out.join("efficiency.json")).unwrap()).unwrap();
    let eff: Vec<&str> = eff.iter().map(|e| e.solution_id.as_str()).collect();
    assert_eq!(eff, ["MiAlgo", "SCBC", "IVLTeam", "DH-AISP", "Manual"]);

    let stdout = String::from_utf8(o.stdout).unwrap();
    let tail = stdout.split("efficiency").nth(1).unwrap();
    let pos: Vec<usize> = eff.iter().map(|s| tail.find(s).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{tail}");
}

#[test]
fn score_argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (log, manifest, _) = write_study(dir.path(), 1);
    let o = nightisp(&[
        "score",
        "--votes",
        log.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--efficiency",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = nightisp(&[
        "score",
        "--votes",
        dir.path().join("missing.jsonl").to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = nightisp(&[
        "score",
        "--votes",
        log.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--top-voters",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn_server(dir: &Path) -> (Server, String) {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let child = Command::new(env!("CARGO_BIN_EXE_nightisp"))
        .args(["serve", "--port", &port.to_string(), "--store"])
        .arg(dir.join("votes.jsonl"))
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let server = Server(child);
    let url = format!("http://127.0.0.1:{port}");
    let start = Instant::now();
    while std::net::TcpStream::connect(("127.0.0.1", port)).is_err() {
        assert!(start.elapsed() < Duration::from_secs(20), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    (server, url)
}

#[test]
fn remote_commands_match_local_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (_server, url) = spawn_server(dir.path());
    scene(dir.path(), "r");
    let glob = dir.path().join("*.png");
    let (local, remote) = (dir.path().join("local"), dir.path().join("remote"));
    for (out, server) in [(&local, None), (&remote, Some(url.as_str()))] {
        let mut args = vec!["render", glob.to_str().unwrap(), "--size", "64x48", "--out", out.to_str().unwrap()];
        if let Some(u) = server {
            args.extend(["--server", u]);
        }
        let o = nightisp(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        std::fs::read(local.join("r.jpg")).unwrap(),
        std::fs::read(remote.join("r.jpg")).unwrap()
    );

    let (log, manifest, times) = write_study(dir.path(), 2);
    let mut outs = Vec::new();
    for server in [None, Some(url.as_str())] {
        let mut args = vec![
            "score",
            "--votes",
            log.to_str().unwrap(),
            "--manifest",
            manifest.to_str().unwrap(),
            "--times",
            times.to_str().unwrap(),
            "--efficiency",
        ];
        if let Some(u) = server {
            args.extend(["--server", u]);
        }
        let o = nightisp(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(o.stdout);
    }
    assert_eq!(outs[0], outs[1]);

    let o = nightisp(&["validate", "--preset", "baseline", "--server", &url]);
    assert!(o.status.success(), "{}", stderr(&o));
}
