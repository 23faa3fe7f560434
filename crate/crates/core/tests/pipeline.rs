mod common;

use std::time::Duration;

use nightisp::pipeline::{
    self, bench, BenchOptions, DataSpace, OutputSpec, PipelineSpec, Registry, RunContext, RunOptions, SpecErrorKind,
    Stage, StageSpec, Work, FIT_CANVAS,
};
use nightisp::planar::MosaicF;
use nightisp::rawio::{build_gain_map_from_mosaic, RawFrame};
use nightisp::{ColorSpace, Error, ImageF};

/// Passes any data through after sleeping.
struct Sleep(Duration);

impl Stage for Sleep {
    fn output_space(&self, input: DataSpace) -> Option<DataSpace> {
        Some(input)
    }

    fn expects(&self) -> String {
        "any".into()
    }

    fn apply<'a>(&self, input: Work<'a>, _: &RunContext<'_>) -> nightisp::Result<Work<'a>> {
        std::thread::sleep(self.0);
        Ok(input)
    }
}

fn registry_with_test_stages() -> Registry {
    let mut r = Registry::with_builtins();
    r.register("sleep", |p, _| {
        let ms: u64 = p.or("ms", 50)?;
        Ok(Box::new(Sleep(Duration::from_millis(ms))) as Box<dyn Stage>)
    });
    r
}

fn baseline_at(w: usize, h: usize) -> PipelineSpec {
    let mut spec = pipeline::preset("baseline").unwrap();
    spec.output.width = w;
    spec.output.height = h;
    spec
}

fn constant_frame(w: usize, h: usize, v: f32) -> RawFrame {
    let m = MosaicF::new(w, h, vec![v; w * h], common::rggb()).unwrap();
    common::raw_from_mosaic(&m, "flat")
}

fn scene_frame(w: usize, h: usize, seed: u64) -> RawFrame {
    common::raw_from_mosaic(&common::mosaic(&common::scene(w, h, seed)), &format!("scene{seed}"))
}

#[test]
fn baseline_on_constant_frame_is_constant_with_six_reports() {
    let raw = constant_frame(64, 48, 0.3);
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let out = p.run(&raw, &RunOptions::default()).unwrap();
    assert_eq!(out.reports.len(), 6);
    assert_eq!(
        out.reports.iter().map(|r| r.stage_id.as_str()).collect::<Vec<_>>(),
        p.stage_ids().collect::<Vec<_>>()
    );
    // Gray-balanced, so neutral up to the rounding of the shipped matrices.
    let first = out.image.pixel(0, 0);
    assert!((first[0] - first[1]).abs() < 2e-3 && (first[2] - first[1]).abs() < 2e-3, "{first:?}");
    for c in 0..3 {
        assert!(out.image.plane(c).iter().all(|&v| (v - first[c]).abs() < 1e-5));
    }
    assert_eq!(out.image.space(), ColorSpace::SrgbEncoded);
    let sum: f64 = out.reports.iter().map(|r| r.wall_time).sum();
    assert_eq!(out.total_seconds, sum);
}

#[test]
fn off_canvas_frames_get_a_fit_canvas_report() {
    let raw = scene_frame(128, 96, 1);
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let out = p.run(&raw, &RunOptions::default()).unwrap();
    assert_eq!(out.reports.len(), 7);
    assert_eq!(out.reports.last().unwrap().stage_id, FIT_CANVAS);
    assert_eq!((out.image.width(), out.image.height()), (64, 48));
}

#[test]
fn portrait_frames_get_a_portrait_canvas() {
    let raw = scene_frame(96, 128, 2);
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let out = p.run(&raw, &RunOptions::default()).unwrap();
    assert_eq!((out.image.width(), out.image.height()), (48, 64));
}

#[test]
fn sleep_stage_is_reported_and_others_are_not_charged() {
    let reg = registry_with_test_stages();
    let mut spec = baseline_at(64, 48);
    spec.stages.insert(2, StageSpec::new("sleep").with("ms", 50));
    let p = reg.compile(&spec).unwrap();
    let out = p.run(&scene_frame(64, 48, 3), &RunOptions::default()).unwrap();
    let sleep = &out.reports[2];
    assert_eq!(sleep.stage_id, "sleep");
    assert!(sleep.wall_time >= 0.050, "{}", sleep.wall_time);
    for (i, r) in out.reports.iter().enumerate() {
        if i != 2 {
            assert!(r.wall_time < 0.040, "{} took {}", r.stage_id, r.wall_time);
        }
    }
}

#[test]
fn render_encodes_the_canvas() {
    let raw = scene_frame(64, 48, 4);
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let (bytes, out) = p.render(&raw, &RunOptions::default()).unwrap();
    let img = image::load_from_memory(&bytes).unwrap();
    assert_eq!((img.width(), img.height()), (64, 48));
    assert_eq!(img.color(), image::ColorType::Rgb8);
    assert_eq!(p.extension(), "jpg");
    assert_eq!(out.reports.len(), 6);
}

#[test]
fn stage_failures_name_the_stage() {
    let spec = PipelineSpec {
        name: "tiny".into(),
        stages: ["normalize_levels", "demosaic_menon", "camera_to_xyz", "xyz_to_srgb_linear", "encode_srgb"]
            .into_iter()
            .map(StageSpec::new)
            .collect(),
        output: OutputSpec {
            width: 2,
            height: 2,
            ..OutputSpec::default()
        },
    };
    let p = pipeline::compile(&spec).unwrap();
    let raw = constant_frame(2, 2, 0.5);
    match p.run(&raw, &RunOptions::default()) {
        Err(Error::Stage { index, stage_id, .. }) => {
            assert_eq!((index, stage_id.as_str()), (1, "demosaic_menon"));
        }
        other => panic!("expected a stage error, got {other:?}"),
    }
}

#[test]
fn shading_stage_uses_the_run_gain_map() {
    let (w, h) = (64, 48);
    let falloff: Vec<f32> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f32 - 31.5, (i / w) as f32 - 23.5);
            0.5 * (0.02 * (x * x + y * y).sqrt()).cos().powi(4)
        })
        .collect();
    let m = MosaicF::new(w, h, falloff, common::rggb()).unwrap();
    let raw = common::raw_from_mosaic(&m, "white");
    let map = build_gain_map_from_mosaic(&nightisp::mosaic::normalize_levels(&raw), 2.0, 4.0).unwrap();
    let spec = PipelineSpec {
        name: "lsc".into(),
        stages: [
            "normalize_levels",
            "shading_correct",
            "demosaic_bilinear",
            "camera_to_xyz",
            "xyz_to_srgb_linear",
            "encode_srgb",
        ]
            .into_iter()
            .map(StageSpec::new)
            .collect(),
        output: OutputSpec {
            width: w,
            height: h,
            ..OutputSpec::default()
        },
    };
    let p = pipeline::compile(&spec).unwrap();
    let plain = p.run(&raw, &RunOptions::default()).unwrap().image;
    let fixed = p
        .run(&raw, &RunOptions { seed: 0, gain_map: Some(&map) })
        .unwrap()
        .image;
    let spread = |img: &ImageF| {
        let g = img.plane(1);
        g.iter().copied().fold(0f32, f32::max) - g.iter().copied().fold(1f32, f32::min)
    };
    assert!(spread(&fixed) < spread(&plain) / 4.0);
}

#[test]
fn validation_errors_carry_index_and_kind() {
    let mut spec = baseline_at(64, 48);
    spec.stages.insert(1, StageSpec::new("encode_srgb"));
    let e = pipeline::validate(&spec).unwrap_err();
    assert_eq!(e.index, 1);
    assert!(matches!(e.kind, SpecErrorKind::SpaceChain { .. }));

    let mut spec = baseline_at(64, 48);
    spec.stages[3] = StageSpec::new("foo");
    let e = pipeline::validate(&spec).unwrap_err();
    assert_eq!((e.index, e.kind), (3, SpecErrorKind::UnknownStage));
}

#[test]
fn spec_json_round_trips() {
    for name in pipeline::preset_names() {
        let spec = pipeline::preset(name).unwrap();
        assert_eq!(PipelineSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}

#[test]
fn bench_reports_the_median_of_repeats() {
    let raw = scene_frame(64, 48, 5);
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let s = bench(std::slice::from_ref(&raw), &p, &BenchOptions::default()).unwrap();
    assert_eq!(s.images.len(), 1);
    assert_eq!(s.images[0].runs.len(), 3);
    assert_eq!(s.images[0].seconds, pipeline::median(&s.images[0].runs));
    assert_eq!(s.seconds_per_image, s.images[0].seconds);
    assert_eq!(s.stages.len(), 6);
    assert!(s.to_table().contains("mean per image"));
    let back: pipeline::BenchSummary = serde_json::from_str(&s.to_json()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn bench_of_nothing_is_empty() {
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let s = bench(&[], &p, &BenchOptions::default()).unwrap();
    assert!(s.images.is_empty() && s.stages.is_empty());
    assert_eq!(s.seconds_per_image, 0.0);
}

#[test]
fn concurrent_bench_covers_every_image() {
    let raws: Vec<RawFrame> = (0..4).map(|s| scene_frame(64, 48, s)).collect();
    let p = pipeline::compile(&baseline_at(64, 48)).unwrap();
    let opts = BenchOptions {
        repeats: 2,
        concurrent: true,
        ..BenchOptions::default()
    };
    let s = bench(&raws, &p, &opts).unwrap();
    let ids: Vec<_> = s.images.iter().map(|i| i.frame_id.clone()).collect();
    assert_eq!(ids, ["scene0", "scene1", "scene2", "scene3"]);
}

#[test]
fn no_op_stage_does_not_move_the_total() {
    let reg = registry_with_test_stages();
    let raw = scene_frame(768, 512, 6);
    let a = reg.compile(&baseline_at(768, 512)).unwrap();
    let mut spec = baseline_at(768, 512);
    spec.stages.insert(3, StageSpec::new("sleep").with("ms", 0));
    let b = reg.compile(&spec).unwrap();
    let opts = BenchOptions {
        repeats: 9,
        ..BenchOptions::default()
    };
    // Interleave a few rounds and keep the closest pair to damp scheduler noise.
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let ta = bench(std::slice::from_ref(&raw), &a, &opts).unwrap().seconds_per_image;
        let tb = bench(std::slice::from_ref(&raw), &b, &opts).unwrap().seconds_per_image;
        best = best.min((tb / ta - 1.0).abs());
    }
    assert!(best <= 0.02, "relative difference {best}");
}

#[test]
fn every_preset_renders_small_frames() {
    let raw = scene_frame(96, 64, 7);
    for name in pipeline::preset_names() {
        let mut spec = pipeline::preset(name).unwrap();
        spec.output.width = 48;
        spec.output.height = 32;
        let p = pipeline::compile(&spec).unwrap();
        let (bytes, out) = p
            .render(&raw, &RunOptions::default())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!bytes.is_empty());
        assert_eq!((out.image.width(), out.image.height()), (48, 32), "{name}");
        assert!(out.image.planes().iter().flatten().all(|v| (0.0..=1.0).contains(v)), "{name}");
    }
}
