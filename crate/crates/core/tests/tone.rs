mod common;

use nightisp::tone::{
    self, hue_of, memory_color_enhance, naka_rushton, naka_rushton_value, nite_tonemap, piecewise_gamma, s_curve_value,
    HueWindow, MemoryColor, ToneParams,
};
use nightisp::{ColorSpace, ImageF};

fn mean(img: &ImageF, xs: std::ops::Range<usize>) -> f64 {
    let mut s = 0.0;
    let mut n = 0;
    for y in 0..img.height() {
        for x in xs.clone() {
            s += img.pixel(x, y).iter().map(|&v| v as f64).sum::<f64>();
            n += 3;
        }
    }
    s / n as f64
}

#[test]
fn nite_grid_sees_local_darkness() {
    let img = ImageF::from_fn(64, 32, ColorSpace::SrgbLinear, |x, _| {
        if x < 32 {
            [0.02, 0.02, 0.02]
        } else {
            [0.6, 0.6, 0.6]
        }
    })
    .unwrap();
    let global = nite_tonemap(&img, (1, 1), 1.0).unwrap();
    let local = nite_tonemap(&img, (2, 1), 1.0).unwrap();
    assert!(mean(&local, 0..32) > mean(&global, 0..32));
}

#[test]
fn nite_on_uniform_image_is_global_naka_rushton() {
    let img = ImageF::filled(20, 12, [0.3, 0.3, 0.3], ColorSpace::SrgbLinear).unwrap();
    for grid in [(1, 1), (3, 2), (4, 3)] {
        let a = nite_tonemap(&img, grid, 0.7).unwrap();
        let alpha = 0.7 * tone::geometric_mean_luminance(img.plane(1).iter().copied());
        let b = naka_rushton(&img, alpha).unwrap();
        assert_eq!(a, b, "grid {grid:?}");
    }
}

#[test]
fn naka_rushton_closed_forms() {
    // Raw x/(x+α) at x = α is ½; normalised by 1/(1+α).
    let alpha = 0.3f32;
    let raw = alpha / (alpha + alpha);
    assert_eq!(raw, 0.5);
    assert!((naka_rushton_value(alpha, alpha) - raw * (1.0 + alpha)).abs() < 1e-6);
    assert!((naka_rushton_value(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-6);
    assert_eq!(naka_rushton_value(0.0, 1.0), 0.0);
    assert!((naka_rushton_value(1.0, 0.2) - 1.0).abs() < 1e-6);
}

#[test]
fn s_curve_closed_form() {
    assert!((s_curve_value(0.25, 0.0, 0.8) - 0.25f32.powf(0.8)).abs() < 1e-6);
    assert!((s_curve_value(0.25, 0.0, 0.8) - 0.3299).abs() < 1e-4);
}

#[test]
fn memory_color_pulls_sky_and_boosts_saturation() {
    let sky = MemoryColor {
        window: HueWindow { start: 190.0, end: 250.0 },
        target_hue: 220.0,
        sat_gain: 1.2,
    };
    // HSV hue 220° exactly at the target: only saturation changes.
    let px = [0.2f32, 0.3333, 0.6];
    let img = ImageF::filled(1, 1, px, ColorSpace::SrgbEncoded).unwrap();
    let out = memory_color_enhance(&img, &[sky]).unwrap().pixel(0, 0);
    let h_in = hue_of(px).unwrap();
    let h_out = hue_of(out).unwrap();
    assert!((h_in - h_out).abs() < 1.0, "{h_in} -> {h_out}");
    let chroma = |p: [f32; 3]| {
        let y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        p.iter().map(|&v| (v - y).powi(2)).sum::<f32>().sqrt()
    };
    let ratio = chroma(out) / chroma(px);
    assert!(ratio > 1.0 && ratio <= 1.2 + 1e-3, "chroma ratio {ratio}");
    assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn piecewise_gamma_knots_bend_between_segments() {
    let knots = [(0.5f32, 0.8f32), (1.0, 1.2)];
    let img = ImageF::from_fn(101, 1, ColorSpace::SrgbEncoded, |x, _| {
        let v = x as f32 / 100.0;
        [v, v, v]
    })
    .unwrap();
    let out = piecewise_gamma(&img, &knots).unwrap();
    let p = out.plane(0);
    assert_eq!(p[0], 0.0);
    assert!((p[100] - 1.0).abs() < 1e-6);
    assert!(p.windows(2).all(|w| w[1] >= w[0]));
    assert!(p[25] > 0.25, "shadows lifted by the first segment");
}

#[test]
fn conditional_contrast_leaves_midtones() {
    let p = ToneParams::default();
    let img = ImageF::filled(8, 8, [0.35, 0.35, 0.35], ColorSpace::SrgbEncoded).unwrap();
    assert_eq!(tone::conditional_contrast(&img, 0.18, 0.55, &p).unwrap(), img);
}

#[test]
fn full_tone_chain_stays_in_range() {
    let img = common::scene(48, 36, 2).with_space(ColorSpace::SrgbEncoded);
    let p = ToneParams::default();
    let steps: Vec<ImageF> = vec![
        tone::local_contrast_correction(&img, 8.0).unwrap(),
        tone::mean_contrast_stretch(&img, 1.5).unwrap(),
        tone::s_curve(&img, 0.4, 0.7).unwrap(),
        tone::histogram_stretch(&img, 1.0, 99.0).unwrap(),
        tone::autocontrast(&img, 2.0).unwrap(),
        tone::conditional_contrast(&img, 0.3, 0.5, &p).unwrap(),
        tone::unsharp_mask(&img, 2.0, 1.5, 0.0).unwrap(),
        tone::saturation_adjust(&img, 1.8, None).unwrap(),
    ];
    for (i, out) in steps.iter().enumerate() {
        assert!(out.planes().iter().flatten().all(|v| (0.0..=1.0).contains(v)), "step {i}");
    }
}
