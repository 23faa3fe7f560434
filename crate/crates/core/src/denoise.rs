//! Noise estimation and the classical denoisers.

use serde::{Deserialize, Serialize};

use crate::color::{rgb_to_ycbcr, ycbcr_to_rgb};
use crate::error::{Error, Result};
use crate::filter::{gaussian_blur, luma, reflect};
use crate::planar::{ColorSpace, ImageF};

/// Additive noise standard deviation in `[0, 1]` signal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma: f32,
}

/// Median absolute deviation of the finest diagonal Haar band, scaled for a
/// Gaussian: `σ = median(|HH|) / 0.6745`. Runs on luma (or on Y directly for
/// YCbCr input).
pub fn estimate_noise_sigma(img: &ImageF) -> NoiseEstimate {
    let (w, h) = (img.width(), img.height());
    let y_plane: Vec<f32> = if img.space() == ColorSpace::YCbCr {
        img.plane(0).to_vec()
    } else {
        (0..img.len())
            .map(|i| luma([img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]]))
            .collect()
    };
    let mut hh = Vec::with_capacity((w / 2) * (h / 2));
    for by in 0..h / 2 {
        for bx in 0..w / 2 {
            let at = |dx: usize, dy: usize| y_plane[(2 * by + dy) * w + 2 * bx + dx];
            hh.push(((at(0, 0) - at(1, 0) - at(0, 1) + at(1, 1)) * 0.5).abs());
        }
    }
    if hh.is_empty() {
        return NoiseEstimate { sigma: 0.0 };
    }
    let mid = hh.len() / 2;
    let (_, m, _) = hh.select_nth_unstable_by(mid, f32::total_cmp);
    let mut median = *m;
    if hh.len() % 2 == 0 {
        let below = hh[..mid].iter().copied().fold(f32::MIN, f32::max);
        median = 0.5 * (median + below);
    }
    NoiseEstimate {
        sigma: median / 0.6745,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlmParams {
    pub k_luma: f32,
    pub k_chroma: f32,
    pub patch: usize,
    pub window: usize,
}

impl Default for NlmParams {
    fn default() -> Self {
        NlmParams {
            k_luma: 0.6,
            k_chroma: 1.2,
            patch: 7,
            window: 21,
        }
    }
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_luma >= 0.0 && self.k_chroma >= self.k_luma) {
            return Err(Error::Param(format!(
                "need k_chroma >= k_luma >= 0, got {} / {}",
                self.k_chroma, self.k_luma
            )));
        }
        if self.patch % 2 == 0 || self.window % 2 == 0 {
            return Err(Error::Param("patch and window sizes must be odd".into()));
        }
        Ok(())
    }
}

/// Non-local means on one plane with filtering strength `h`.
///
/// Patch distance is the mean squared difference over a `patch × patch`
/// block; weights are `exp(-max(d² - 2σ², 0) / h²)`. Patch sums are direct
/// sums, so results do not depend on traversal order.
fn nlm_plane(src: &[f32], w: usize, hgt: usize, sigma: f32, h: f32, patch: usize, window: usize) -> Vec<f32> {
    if h <= 0.0 {
        return src.to_vec();
    }
    let pr = patch / 2;
    let sr = window / 2;
    let pad = pr + sr;
    let pw = w + 2 * pad;
    let ph = hgt + 2 * pad;
    let mut padded = vec![0.0f32; pw * ph];
    for y in 0..ph {
        let sy = reflect(y as isize - pad as isize, hgt);
        for x in 0..pw {
            padded[y * pw + x] = src[sy * w + reflect(x as isize - pad as isize, w)];
        }
    }

    let inv_h2 = 1.0 / (h * h);
    let bias = 2.0 * sigma * sigma;
    let norm = 1.0 / (patch * patch) as f32;
    // Weights below exp(-30) are dropped.
    let cutoff = 30.0f32;

    let mut acc_w = vec![1.0f32; w * hgt];
    let mut acc_v = src.to_vec();
    // Squared differences over the image grown by the patch radius.
    let dw = w + 2 * pr;
    let dh = hgt + 2 * pr;
    let mut diff = vec![0.0f32; dw * dh];
    let mut colsum = vec![0.0f32; dw * hgt];

    for oy in -(sr as isize)..=sr as isize {
        for ox in -(sr as isize)..=sr as isize {
            if ox == 0 && oy == 0 {
                continue;
            }
            for y in 0..dh {
                let a = (y + sr) * pw + sr;
                let b = ((y + sr) as isize + oy) as usize * pw + (sr as isize + ox) as usize;
                let row = &mut diff[y * dw..(y + 1) * dw];
                for (x, d) in row.iter_mut().enumerate() {
                    let t = padded[a + x] - padded[b + x];
                    *d = t * t;
                }
            }
            for y in 0..hgt {
                let out = &mut colsum[y * dw..(y + 1) * dw];
                out.copy_from_slice(&diff[y * dw..(y + 1) * dw]);
                for k in 1..patch {
                    let row = &diff[(y + k) * dw..(y + k + 1) * dw];
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o += v;
                    }
                }
            }
            for y in 0..hgt {
                let cs = &colsum[y * dw..(y + 1) * dw];
                let nb = ((y + pad) as isize + oy) as usize * pw + (pad as isize + ox) as usize;
                for x in 0..w {
                    let mut d2 = 0.0f32;
                    for &v in &cs[x..x + patch] {
                        d2 += v;
                    }
                    let arg = (d2 * norm - bias).max(0.0) * inv_h2;
                    if arg < cutoff {
                        let wt = (-arg).exp();
                        let i = y * w + x;
                        acc_w[i] += wt;
                        acc_v[i] += wt * padded[nb + x];
                    }
                }
            }
        }
    }
    acc_v.iter().zip(&acc_w).map(|(&v, &wt)| v / wt).collect()
}

/// Non-local means with separate strengths for luma and chroma:
/// `h = k_luma·σ` on Y and `h = k_chroma·σ` on Cb/Cr. RGB input is
/// converted to BT.601 YCbCr and back.
pub fn nlm_denoise(img: &ImageF, sigma: NoiseEstimate, params: &NlmParams) -> Result<ImageF> {
    params.validate()?;
    if sigma.sigma <= 0.0 || (params.k_luma == 0.0 && params.k_chroma == 0.0) {
        return Ok(img.clone());
    }
    let space = img.space();
    let ycc = if space == ColorSpace::YCbCr {
        img.clone()
    } else {
        rgb_to_ycbcr(img)
    };
    let (w, h) = (img.width(), img.height());
    let s = sigma.sigma;
    let strengths = [params.k_luma * s, params.k_chroma * s, params.k_chroma * s];
    let planes = [0, 1, 2].map(|c| nlm_plane(ycc.plane(c), w, h, s, strengths[c], params.patch, params.window));
    let out = ImageF::from_planes(w, h, planes, ColorSpace::YCbCr)?;
    Ok(if space == ColorSpace::YCbCr {
        out
    } else {
        ycbcr_to_rgb(&out, space).map_samples(|v| v.clamp(0.0, 1.0))
    })
}

/// Gaussian blur of Cb and Cr; Y is copied untouched.
pub fn gaussian_chroma(img: &ImageF, sigma_px: f32) -> ImageF {
    if sigma_px <= 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for c in 1..3 {
        let blurred = gaussian_blur(img.plane(c), w, h, sigma_px);
        out.plane_mut(c).copy_from_slice(&blurred);
    }
    out
}

/// Chambolle's dual projection step size; 1/8 is the proven-convergent bound.
const TV_TAU: f32 = 0.125;

/// ROF total-variation denoising of one plane:
/// `argmin_u λ·TV(u) + ½‖u − f‖²`, solved with a fixed number of dual
/// projection iterations.
pub fn tv_denoise_plane(f: &[f32], w: usize, h: usize, lambda: f32, iterations: usize) -> Vec<f32> {
    if lambda <= 0.0 || iterations == 0 {
        return f.to_vec();
    }
    let n = w * h;
    let mut px = vec![0.0f32; n];
    let mut py = vec![0.0f32; n];
    let mut div = vec![0.0f32; n];
    let mut v = vec![0.0f32; n];
    let inv_lambda = 1.0 / lambda;

    let divergence = |px: &[f32], py: &[f32], div: &mut [f32]| {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let dx = if x == 0 {
                    px[i]
                } else if x == w - 1 {
                    -px[i - 1]
                } else {
                    px[i] - px[i - 1]
                };
                let dy = if y == 0 {
                    py[i]
                } else if y == h - 1 {
                    -py[i - w]
                } else {
                    py[i] - py[i - w]
                };
                div[i] = dx + dy;
            }
        }
    };

    for _ in 0..iterations {
        divergence(&px, &py, &mut div);
        for i in 0..n {
            v[i] = div[i] - f[i] * inv_lambda;
        }
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let gx = if x + 1 < w { v[i + 1] - v[i] } else { 0.0 };
                let gy = if y + 1 < h { v[i + w] - v[i] } else { 0.0 };
                let mag = (gx * gx + gy * gy).sqrt();
                let denom = 1.0 + TV_TAU * mag;
                px[i] = (px[i] + TV_TAU * gx) / denom;
                py[i] = (py[i] + TV_TAU * gy) / denom;
            }
        }
    }
    divergence(&px, &py, &mut div);
    f.iter().zip(&div).map(|(&fv, &d)| fv - lambda * d).collect()
}

/// TV denoising of the Y plane only; chroma is copied untouched.
pub fn tv_denoise_luma(img: &ImageF, lambda: f32, iterations: usize) -> Result<ImageF> {
    if !(lambda >= 0.0) {
        return Err(Error::Param(format!("lambda must be >= 0, got {lambda}")));
    }
    if iterations == 0 {
        return Err(Error::Param("iterations must be >= 1".into()));
    }
    if lambda == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let y = tv_denoise_plane(img.plane(0), w, h, lambda, iterations);
    let mut out = img.clone();
    for (o, v) in out.plane_mut(0).iter_mut().zip(y) {
        *o = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Isotropic discrete total variation with forward differences.
pub fn total_variation(plane: &[f32], w: usize, h: usize) -> f64 {
    let mut tv = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let gx = if x + 1 < w { plane[i + 1] - plane[i] } else { 0.0 } as f64;
            let gy = if y + 1 < h { plane[i + w] - plane[i] } else { 0.0 } as f64;
            tv += (gx * gx + gy * gy).sqrt();
        }
    }
    tv
}
