mod common;

use nightisp::color::{
    self, apply_wb, camera_to_xyz, gray_world, grayness_index, srgb_encode_value, white_patch_subsampled,
    xyz_to_srgb_linear, Illuminant,
};
use nightisp::mosaic::{demosaic_bilinear, normalize_levels};
use nightisp::{ColorSpace, ImageF};
use rand::Rng;

fn normalised(v: [f64; 3]) -> [f64; 3] {
    [v[0] / v[1], 1.0, v[2] / v[1]]
}

fn close(a: [f64; 3], b: [f64; 3], rel: f64) -> bool {
    let (a, b) = (normalised(a), normalised(b));
    (0..3).all(|c| (a[c] / b[c] - 1.0).abs() <= rel)
}

fn cast(img: &ImageF, l: [f64; 3]) -> ImageF {
    ImageF::from_fn(img.width(), img.height(), ColorSpace::CameraLinear, |x, y| {
        let p = img.pixel(x, y);
        [p[0] * l[0] as f32, p[1] * l[1] as f32, p[2] * l[2] as f32]
    })
    .unwrap()
}

#[test]
fn gray_world_inverts_a_cast_gray_scene() {
    let mut r = common::rng(11);
    let l = [1.7, 1.0, 0.55];
    let base = ImageF::from_fn(48, 32, ColorSpace::CameraLinear, |_, _| {
        let v = 0.05 + 0.4 * r.random::<f32>();
        [v, v, v]
    })
    .unwrap();
    let est = gray_world(&cast(&base, l)).unwrap();
    assert!(close(est.rgb(), l, 1e-6), "{:?}", est.rgb());
}

#[test]
fn white_patch_finds_the_patch_illuminant() {
    let l = [0.8, 1.0, 0.45];
    let mut r = common::rng(5);
    let base = ImageF::from_fn(64, 64, ColorSpace::CameraLinear, |x, y| {
        if (24..40).contains(&x) && (24..40).contains(&y) {
            [0.95, 0.95, 0.95]
        } else {
            [0.3 * r.random::<f32>(), 0.4 * r.random::<f32>(), 0.35 * r.random::<f32>()]
        }
    })
    .unwrap();
    let est = white_patch_subsampled(&cast(&base, l), 256, 100, 7).unwrap();
    assert!(close(est.rgb(), l, 0.05), "{:?}", est.rgb());
}

#[test]
fn white_patch_is_seed_deterministic() {
    let img = common::scene(40, 40, 1);
    let a = white_patch_subsampled(&img, 32, 10, 99).unwrap();
    let b = white_patch_subsampled(&img, 32, 10, 99).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grayness_index_recovers_cast_from_achromatic_region() {
    let l = [2.0, 1.0, 1.0];
    let mut r = common::rng(21);
    let base = ImageF::from_fn(96, 96, ColorSpace::CameraLinear, |x, _| {
        if x < 32 {
            let v = 0.1 + 0.5 * r.random::<f32>();
            [v, v, v]
        } else {
            [
                0.05 + 0.6 * r.random::<f32>(),
                0.05 + 0.6 * r.random::<f32>(),
                0.05 + 0.6 * r.random::<f32>(),
            ]
        }
    })
    .unwrap();
    let est = grayness_index(&cast(&base, l), 1.0, 0.05).unwrap();
    assert!(close(est.rgb(), l, 0.02), "{:?}", est.rgb());
}

#[test]
fn grayness_index_with_all_pixels_is_gray_world() {
    let img = common::scene(50, 40, 8);
    let gi = grayness_index(&img, 3.0, 1.0).unwrap();
    let gw = gray_world(&img).unwrap();
    assert!(close(gi.rgb(), gw.rgb(), 1e-6), "{:?} vs {:?}", gi.rgb(), gw.rgb());
}

#[test]
fn wb_undoes_its_own_cast() {
    let l = [0.6, 1.0, 1.4];
    let base = ImageF::from_fn(10, 10, ColorSpace::CameraLinear, |x, y| {
        let v = 0.01 * (x + 10 * y) as f32;
        [v, v, v]
    })
    .unwrap();
    let out = apply_wb(&cast(&base, l), &Illuminant::new(l).unwrap());
    for i in 0..out.len() {
        let (r, g, b) = (out.plane(0)[i], out.plane(1)[i], out.plane(2)[i]);
        assert!((r - g).abs() < 1e-6 && (b - g).abs() < 1e-6);
    }
}

#[test]
fn as_shot_neutral_makes_gray_card_achromatic() {
    // A frame whose gray card was captured under the frame's own neutral.
    let meta = common::meta("card");
    let n = meta.as_shot_neutral;
    let scene = ImageF::from_fn(64, 48, ColorSpace::CameraLinear, |x, y| {
        if (16..48).contains(&x) && (12..36).contains(&y) {
            [0.4 * n[0] as f32, 0.4 * n[1] as f32, 0.4 * n[2] as f32]
        } else {
            [0.2, 0.1 + 0.002 * x as f32, 0.05]
        }
    })
    .unwrap();
    let raw = common::raw_from_mosaic(&common::mosaic(&scene), "card");
    let img = demosaic_bilinear(&normalize_levels(&raw));
    let out = apply_wb(&img, &Illuminant::new(raw.meta.as_shot_neutral).unwrap());
    let (mut s, mut k) = ([0f64; 3], 0);
    for y in 20..28 {
        for x in 24..40 {
            let p = out.pixel(x, y);
            for c in 0..3 {
                s[c] += p[c] as f64;
            }
            k += 1;
        }
    }
    let m = s.map(|v| v / k as f64);
    assert!((m[0] / m[1] - 1.0).abs() < 0.05 && (m[2] / m[1] - 1.0).abs() < 0.05, "{m:?}");
}

#[test]
fn d65_white_maps_to_unit_srgb() {
    let xyz = ImageF::filled(1, 1, [0.9505, 1.0, 1.089], ColorSpace::Xyz).unwrap();
    let p = xyz_to_srgb_linear(&xyz).pixel(0, 0);
    for v in p {
        assert!((v - 1.0).abs() < 1e-3, "{p:?}");
    }
    // Independent product with the standard matrix.
    let m = color::config().xyz_to_srgb;
    let expect: Vec<f64> = m.iter().map(|row| row[0] * 0.9505 + row[1] + row[2] * 1.089).collect();
    for c in 0..3 {
        assert!((p[c] as f64 - expect[c].max(0.0)).abs() < 1e-5);
    }
}

#[test]
fn out_of_gamut_xyz_clamps_a_channel() {
    let xyz = ImageF::filled(1, 1, [0.1, 0.05, 0.9], ColorSpace::Xyz).unwrap();
    let p = xyz_to_srgb_linear(&xyz).pixel(0, 0);
    assert!(p.iter().any(|&v| v == 0.0), "{p:?}");
    assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn srgb_branches_meet() {
    let lin = 0.0031308f64;
    let lower = 12.92 * lin;
    let upper = 1.055 * lin.powf(1.0 / 2.4) - 0.055;
    assert!((lower - upper).abs() < 1e-6);
    assert!((srgb_encode_value(lin as f32) as f64 - 0.04045).abs() < 1e-5);
    let mid = 1.055 * 0.18f64.powf(1.0 / 2.4) - 0.055;
    assert!((srgb_encode_value(0.18) as f64 - mid).abs() < 1e-6);
    assert!((mid - 0.4613).abs() < 1e-4);
}

#[test]
fn cst_is_linear() {
    let cst = common::SRGB_TO_XYZ;
    let ones = ImageF::filled(2, 2, [1.0, 1.0, 1.0], ColorSpace::CameraLinear).unwrap();
    let p = camera_to_xyz(&ones, &cst).pixel(1, 1);
    for c in 0..3 {
        let row: f64 = cst[c].iter().sum();
        assert!((p[c] as f64 - row).abs() < 1e-6);
    }
}
