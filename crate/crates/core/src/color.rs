//! Illuminant estimation, white balance and colour-space conversion.

use std::sync::LazyLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{gaussian_blur, reflect};
use crate::planar::{ColorSpace, ImageF};
use crate::rawio::Matrix3;

/// Matrices shipped with the crate in `config/color.json`.
#[derive(Debug, Clone, Deserialize)]
pub struct ColorConfig {
    pub dataset_mean_cst: Matrix3,
    pub xyz_to_srgb: Matrix3,
}

static CONFIG: LazyLock<ColorConfig> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../config/color.json")).expect("bundled color config is valid")
});

pub fn config() -> &'static ColorConfig {
    &CONFIG
}

/// Pixels with any channel at or below this are excluded from grayness analysis.
pub const GRAYNESS_EPSILON: f32 = 1e-4;

/// Camera-space illuminant normalised so that green is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Illuminant {
    rgb: [f64; 3],
}

impl Illuminant {
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::DegenerateImage(format!(
                "illuminant components must be positive, got {rgb:?}"
            )));
        }
        let g = rgb[1];
        Ok(Illuminant {
            rgb: [rgb[0] / g, 1.0, rgb[2] / g],
        })
    }

    pub fn rgb(&self) -> [f64; 3] {
        self.rgb
    }

    /// Per-channel white-balance gains `(1/r, 1, 1/b)`.
    pub fn gains(&self) -> [f64; 3] {
        [1.0 / self.rgb[0], 1.0, 1.0 / self.rgb[2]]
    }

    /// Limits the red and blue gains to `[lo, hi]`, guarding against a green
    /// cast when the estimate is noisy.
    pub fn clamp_gains(&self, lo: f64, hi: f64) -> Illuminant {
        let g = self.gains();
        Illuminant {
            rgb: [1.0 / g[0].clamp(lo, hi), 1.0, 1.0 / g[2].clamp(lo, hi)],
        }
    }
}

/// Per-channel means.
pub fn gray_world(img: &ImageF) -> Result<Illuminant> {
    let means = img.channel_means();
    if means.iter().any(|&m| m <= 0.0) {
        return Err(Error::DegenerateImage(format!("channel mean is zero: {means:?}")));
    }
    Illuminant::new(means)
}

/// Averages per-channel maxima over `trials` random pixel subsets of size
/// `samples_per_trial`, drawn without replacement from a seeded generator.
pub fn white_patch_subsampled(
    img: &ImageF,
    samples_per_trial: usize,
    trials: usize,
    seed: u64,
) -> Result<Illuminant> {
    if samples_per_trial == 0 || trials == 0 {
        return Err(Error::Param("samples_per_trial and trials must be >= 1".into()));
    }
    let n = img.len();
    let k = samples_per_trial.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [0.0f64; 3];
    for _ in 0..trials {
        let mut max = [0.0f32; 3];
        for i in rand::seq::index::sample(&mut rng, n, k) {
            for (c, m) in max.iter_mut().enumerate() {
                *m = m.max(img.plane(c)[i]);
            }
        }
        for c in 0..3 {
            sum[c] += max[c] as f64;
        }
    }
    let est = sum.map(|s| s / trials as f64);
    if est.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateImage("sampled maxima are zero".into()));
    }
    Illuminant::new(est)
}

/// Grayness-index estimate.
///
/// The image is blurred, each pixel is scored by the gradient magnitude of
/// its log-chromaticities `log(R/G)` and `log(B/G)`, and the illuminant is the
/// mean input colour of the `top_fraction` lowest-scoring pixels. Pixels tied
/// with the cut-off score are all kept.
pub fn grayness_index(img: &ImageF, blur_sigma: f32, top_fraction: f64) -> Result<Illuminant> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::Param(format!("top_fraction must be in (0, 1], got {top_fraction}")));
    }
    let (w, h) = (img.width(), img.height());
    let blurred = [0, 1, 2].map(|c| gaussian_blur(img.plane(c), w, h, blur_sigma));

    let n = w * h;
    let mut log_rg = vec![0.0f32; n];
    let mut log_bg = vec![0.0f32; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let (r, g, b) = (blurred[0][i], blurred[1][i], blurred[2][i]);
        if r > GRAYNESS_EPSILON && g > GRAYNESS_EPSILON && b > GRAYNESS_EPSILON {
            valid[i] = true;
            log_rg[i] = (r / g).ln();
            log_bg[i] = (b / g).ln();
        }
    }

    let idx = |x: isize, y: isize| reflect(y, h) * w + reflect(x, w);
    let mut scored: Vec<(f32, usize)> = Vec::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = idx(x, y);
            let (l, r, u, d) = (idx(x - 1, y), idx(x + 1, y), idx(x, y - 1), idx(x, y + 1));
            if !(valid[i] && valid[l] && valid[r] && valid[u] && valid[d]) {
                continue;
            }
            let gx1 = 0.5 * (log_rg[r] - log_rg[l]);
            let gy1 = 0.5 * (log_rg[d] - log_rg[u]);
            let gx2 = 0.5 * (log_bg[r] - log_bg[l]);
            let gy2 = 0.5 * (log_bg[d] - log_bg[u]);
            let gi = (gx1 * gx1 + gy1 * gy1 + gx2 * gx2 + gy2 * gy2).sqrt();
            scored.push((gi, i));
        }
    }
    if scored.is_empty() {
        return Err(Error::DegenerateImage("no pixel above the grayness threshold".into()));
    }

    let keep = ((top_fraction * scored.len() as f64).ceil() as usize).clamp(1, scored.len());
    let mut scores: Vec<f32> = scored.iter().map(|s| s.0).collect();
    let (_, cutoff, _) = scores.select_nth_unstable_by(keep - 1, f32::total_cmp);
    let cutoff = *cutoff;

    let mut sum = [0.0f64; 3];
    let mut count = 0usize;
    for &(gi, i) in &scored {
        if gi <= cutoff {
            for c in 0..3 {
                sum[c] += img.plane(c)[i] as f64;
            }
            count += 1;
        }
    }
    let est = sum.map(|s| s / count as f64);
    if est.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateImage("grey pixels have a zero channel".into()));
    }
    Illuminant::new(est)
}

/// Diagonal von Kries correction. Values may exceed 1.
pub fn apply_wb(img: &ImageF, illum: &Illuminant) -> ImageF {
    if illum.rgb == [1.0, 1.0, 1.0] {
        return img.clone();
    }
    let [gr, _, gb] = illum.gains().map(|g| g as f32);
    let mut out = img.clone();
    out.plane_mut(0).iter_mut().for_each(|v| *v *= gr);
    out.plane_mut(2).iter_mut().for_each(|v| *v *= gb);
    out
}

fn apply_matrix(img: &ImageF, m: &Matrix3, space: ColorSpace) -> ImageF {
    let m = m.map(|row| row.map(|v| v as f32));
    img.clone()
        .map_pixels(|p| {
            [
                m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
                m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
                m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
            ]
        })
        .with_space(space)
}

pub fn camera_to_xyz(img: &ImageF, cst: &Matrix3) -> ImageF {
    apply_matrix(img, cst, ColorSpace::Xyz)
}

/// XYZ → linear sRGB with the IEC 61966-2-1 matrix; negatives clamp to 0.
pub fn xyz_to_srgb_linear(img: &ImageF) -> ImageF {
    apply_matrix(img, &config().xyz_to_srgb, ColorSpace::SrgbLinear).map_samples(|v| v.max(0.0))
}

#[inline]
pub fn srgb_encode_value(x: f32) -> f32 {
    let x = x.clamp(0.0, 1.0);
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
pub fn srgb_decode_value(v: f32) -> f32 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Clamp to `[0, 1]`, then the sRGB transfer curve.
pub fn encode_srgb(img: &ImageF) -> ImageF {
    img.clone()
        .map_samples(srgb_encode_value)
        .with_space(ColorSpace::SrgbEncoded)
}

pub fn decode_srgb(img: &ImageF) -> ImageF {
    img.clone()
        .map_samples(srgb_decode_value)
        .with_space(ColorSpace::SrgbLinear)
}

/// BT.601 full-range RGB → YCbCr, chroma centred on 0.5.
#[inline]
pub fn ycbcr_from_rgb(p: [f32; 3]) -> [f32; 3] {
    let y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    [y, 0.5 + (p[2] - y) / 1.772, 0.5 + (p[0] - y) / 1.402]
}

#[inline]
pub fn rgb_from_ycbcr(p: [f32; 3]) -> [f32; 3] {
    let (y, cb, cr) = (p[0], p[1] - 0.5, p[2] - 0.5);
    let r = y + 1.402 * cr;
    let b = y + 1.772 * cb;
    let g = (y - 0.299 * r - 0.114 * b) / 0.587;
    [r, g, b]
}

pub fn rgb_to_ycbcr(img: &ImageF) -> ImageF {
    img.clone().map_pixels(ycbcr_from_rgb).with_space(ColorSpace::YCbCr)
}

/// Inverse of [`rgb_to_ycbcr`]; `space` is the RGB space to tag the result with.
pub fn ycbcr_to_rgb(img: &ImageF, space: ColorSpace) -> ImageF {
    img.clone().map_pixels(rgb_from_ycbcr).with_space(space)
}
