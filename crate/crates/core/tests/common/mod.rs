#![allow(dead_code)]

use nightisp::planar::{mosaic_from_rgb, MosaicF};
use nightisp::rawio::{FrameMeta, Orientation, RawFrame};
use nightisp::{CfaPattern, ColorSpace, ImageF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BLACK: f64 = 1024.0;
pub const WHITE: f64 = 16383.0;

/// sRGB (D65) → XYZ, so that a camera with this CST is colorimetrically sRGB.
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample (Box-Muller).
pub fn gauss(r: &mut impl Rng) -> f64 {
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn rggb() -> CfaPattern {
    "RGGB".parse().unwrap()
}

pub fn meta(frame_id: &str) -> FrameMeta {
    FrameMeta {
        black_level: BLACK,
        white_level: WHITE,
        as_shot_neutral: [0.5, 1.0, 0.6],
        cst: SRGB_TO_XYZ,
        orientation: Orientation::Normal,
        noise_profile: None,
        frame_id: frame_id.to_string(),
    }
}

/// Quantises a normalised mosaic into a raw frame with the default levels.
pub fn raw_from_mosaic(m: &MosaicF, frame_id: &str) -> RawFrame {
    let samples = m
        .data()
        .iter()
        .map(|&v| (BLACK + v.clamp(0.0, 1.0) as f64 * (WHITE - BLACK)).round() as u16)
        .collect();
    RawFrame::new(m.width(), m.height(), samples, m.cfa(), meta(frame_id)).unwrap()
}

/// A smooth night-ish scene: dim gradient, a lit window, a warm lamp glow,
/// a little colour. Deterministic for a given seed.
pub fn scene(w: usize, h: usize, seed: u64) -> ImageF {
    let mut r = rng(seed);
    let cx = r.random::<f32>() * w as f32;
    let cy = r.random::<f32>() * h as f32;
    let rad = (w.min(h) as f32) * (0.1 + 0.2 * r.random::<f32>());
    let tint = [0.6 + 0.4 * r.random::<f32>(), 0.5 + 0.3 * r.random::<f32>(), 0.2 + 0.3 * r.random::<f32>()];
    let (wx0, wy0) = ((w as f32 * 0.6) as usize, (h as f32 * 0.2) as usize);
    let (wx1, wy1) = (wx0 + w / 8, wy0 + h / 6);
    ImageF::from_fn(w, h, ColorSpace::CameraLinear, |x, y| {
        let fx = x as f32 / w as f32;
        let fy = y as f32 / h as f32;
        let base = 0.02 + 0.08 * (1.0 - fy) + 0.03 * fx;
        let d2 = ((x as f32 - cx).powi(2) + (y as f32 - cy).powi(2)) / (rad * rad);
        let glow = 0.6 * (-d2).exp();
        let win = if (wx0..wx1).contains(&x) && (wy0..wy1).contains(&y) { 0.35 } else { 0.0 };
        [
            (base * 0.8 + glow * tint[0] + win * 0.9).min(1.0),
            (base + glow * tint[1] + win).min(1.0),
            (base * 1.3 + glow * tint[2] + win * 0.7).min(1.0),
        ]
    })
    .unwrap()
}

/// Smooth ramp image (bilinear demosaic is near-exact on it).
pub fn ramp(w: usize, h: usize, seed: u64) -> ImageF {
    let mut r = rng(seed);
    let a: [f32; 3] = [r.random(), r.random(), r.random()];
    let bx: [f32; 3] = [r.random::<f32>() - 0.5, r.random::<f32>() - 0.5, r.random::<f32>() - 0.5];
    let by: [f32; 3] = [r.random::<f32>() - 0.5, r.random::<f32>() - 0.5, r.random::<f32>() - 0.5];
    ImageF::from_fn(w, h, ColorSpace::CameraLinear, |x, y| {
        let fx = x as f32 / w as f32;
        let fy = y as f32 / h as f32;
        std::array::from_fn(|c| (0.25 + 0.5 * a[c] + 0.2 * bx[c] * fx + 0.2 * by[c] * fy).clamp(0.0, 1.0))
    })
    .unwrap()
}

/// Colour-correlated image with sharp straight and curved edges.
pub fn edges(w: usize, h: usize, seed: u64) -> ImageF {
    let mut r = rng(seed);
    let angle = r.random::<f32>() * std::f32::consts::PI;
    let (s, c) = angle.sin_cos();
    let lo: [f32; 3] = [0.1 + 0.2 * r.random::<f32>(), 0.1 + 0.2 * r.random::<f32>(), 0.1 + 0.2 * r.random::<f32>()];
    let hi: [f32; 3] = [0.6 + 0.3 * r.random::<f32>(), 0.6 + 0.3 * r.random::<f32>(), 0.6 + 0.3 * r.random::<f32>()];
    let cx = w as f32 * (0.3 + 0.4 * r.random::<f32>());
    let cy = h as f32 * (0.3 + 0.4 * r.random::<f32>());
    let rad = w.min(h) as f32 * 0.2;
    let period = 6.0 + 6.0 * r.random::<f32>();
    ImageF::from_fn(w, h, ColorSpace::CameraLinear, |x, y| {
        let (fx, fy) = (x as f32 - cx, y as f32 - cy);
        let side = fx * c + fy * s > 0.0;
        let disc = fx * fx + fy * fy < rad * rad;
        let stripes = ((x as f32 * c - y as f32 * s) / period).floor() as i64 % 2 == 0;
        let on = side ^ disc ^ (stripes && y > h / 2);
        if on {
            hi
        } else {
            lo
        }
    })
    .unwrap()
}

pub fn mosaic(img: &ImageF) -> MosaicF {
    mosaic_from_rgb(img, rggb()).unwrap()
}

pub fn mse_interior(a: &ImageF, b: &ImageF, border: usize) -> f64 {
    assert_eq!((a.width(), a.height()), (b.width(), b.height()));
    let (w, h) = (a.width(), a.height());
    let mut sum = 0.0;
    let mut n = 0usize;
    for c in 0..3 {
        for y in border..h - border {
            for x in border..w - border {
                let i = y * w + x;
                let d = (a.plane(c)[i] - b.plane(c)[i]) as f64;
                sum += d * d;
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// PSNR in dB for signals in [0, 1], ignoring a border of `border` pixels.
pub fn psnr(a: &ImageF, b: &ImageF, border: usize) -> f64 {
    let mse = mse_interior(a, b, border);
    if mse == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (1.0 / mse).log10()
}

/// Adds the same Gaussian noise sample to all three channels (luma noise σ).
pub fn add_gray_noise(img: &ImageF, sigma: f64, seed: u64) -> ImageF {
    let mut r = rng(seed);
    let n = img.len();
    let noise: Vec<f32> = (0..n).map(|_| (gauss(&mut r) * sigma) as f32).collect();
    let planes = std::array::from_fn(|c| img.plane(c).iter().zip(&noise).map(|(v, e)| v + e).collect());
    ImageF::from_planes(img.width(), img.height(), planes, img.space()).unwrap()
}

pub fn gray(img: &ImageF) -> ImageF {
    ImageF::from_fn(img.width(), img.height(), img.space(), |x, y| {
        let p = img.pixel(x, y);
        let v = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        [v, v, v]
    })
    .unwrap()
}
pub mod study;
