//! Global and local tone, contrast, saturation and sharpening operators.
//!
//! Operators take and return RGB-like images with samples in `[0, 1]` and
//! keep the colour-space tag. Hue, where it appears, is the HSV hue angle in
//! degrees (red 0, green 120, blue 240). Saturation changes are made by
//! scaling each pixel's offset from its BT.601 luma, which leaves luma and
//! HSV hue unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{gaussian_blur, luma, percentile_sorted, sorted_copy};
use crate::planar::ImageF;

/// Tunable knots of the tone operators, with the defaults used by the IVL
/// preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToneParams {
    pub beta: f32,
    pub curve_center: f32,
    pub curve_strength: f32,
    pub p_lo: f64,
    pub p_hi: f64,
    pub alpha: f32,
    pub grid: (usize, usize),
    pub unsharp_radius: f32,
    pub unsharp_amount: f32,
    pub unsharp_threshold: f32,
    pub gamma: f32,
    pub saturation: f32,
    pub autocontrast_cutoff: f64,
    /// Brightening exponent used by [`conditional_contrast`] on dark images.
    pub dark_gamma: f32,
    /// Darkening curve used by [`conditional_contrast`] on bright images.
    pub bright_curve_center: f32,
    pub bright_curve_strength: f32,
}

impl Default for ToneParams {
    fn default() -> Self {
        ToneParams {
            beta: 1.15,
            curve_center: 0.0,
            curve_strength: 0.85,
            p_lo: 1.0,
            p_hi: 99.0,
            alpha: 0.5,
            grid: (4, 3),
            unsharp_radius: 2.0,
            unsharp_amount: 0.8,
            unsharp_threshold: 0.01,
            gamma: 1.0 / 2.2,
            saturation: 1.0,
            autocontrast_cutoff: 1.0,
            dark_gamma: 0.7,
            bright_curve_center: 0.25,
            bright_curve_strength: 1.4,
        }
    }
}

impl ToneParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.beta,
            self.curve_center,
            self.curve_strength,
            self.alpha,
            self.unsharp_radius,
            self.unsharp_amount,
            self.unsharp_threshold,
            self.gamma,
            self.saturation,
            self.dark_gamma,
            self.bright_curve_center,
            self.bright_curve_strength,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.p_lo.is_finite()
            && self.p_hi.is_finite()
            && self.autocontrast_cutoff.is_finite();
        if !finite {
            return Err(Error::Param("tone parameters must be finite".into()));
        }
        if !(0.0 <= self.p_lo && self.p_lo < self.p_hi && self.p_hi <= 100.0) {
            return Err(Error::Param(format!(
                "need 0 <= p_lo < p_hi <= 100, got {} / {}",
                self.p_lo, self.p_hi
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Param("alpha must be > 0".into()));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::Param("tile grid must be at least 1x1".into()));
        }
        Ok(())
    }
}

fn luma_plane(img: &ImageF) -> Vec<f32> {
    (0..img.len())
        .map(|i| luma([img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]]))
        .collect()
}

/// Moroney-style local contrast correction: a per-pixel gamma
/// `2^((0.5 − m)/0.5)` where `m` is the blurred inverted luma.
pub fn local_contrast_correction(img: &ImageF, mask_sigma: f32) -> Result<ImageF> {
    if !(mask_sigma > 0.0) {
        return Err(Error::Param(format!("mask_sigma must be > 0, got {mask_sigma}")));
    }
    let (w, h) = (img.width(), img.height());
    let inverted: Vec<f32> = luma_plane(img).into_iter().map(|y| 1.0 - y).collect();
    let mask = gaussian_blur(&inverted, w, h, mask_sigma);
    let exps: Vec<f32> = mask.iter().map(|&m| 2f32.powf((0.5 - m) / 0.5)).collect();
    let mut out = img.clone();
    for c in 0..3 {
        for (v, &e) in out.plane_mut(c).iter_mut().zip(&exps) {
            *v = v.clamp(0.0, 1.0).powf(e);
        }
    }
    Ok(out)
}

/// Scales every channel about its own mean by `beta`.
pub fn mean_contrast_stretch(img: &ImageF, beta: f32) -> Result<ImageF> {
    if !(beta >= 0.0) {
        return Err(Error::Param(format!("beta must be >= 0, got {beta}")));
    }
    if beta == 1.0 {
        return Ok(img.clone());
    }
    let means = img.channel_means();
    let mut out = img.clone();
    for c in 0..3 {
        let m = means[c] as f32;
        for v in out.plane_mut(c) {
            *v = (m + beta * (*v - m)).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Two power branches meeting at `center`: below it
/// `c − c·(1 − x/c)^γ`, above it `c + (1−c)·((x − c)/(1−c))^γ`. With
/// `center = 0` this is the plain power curve `x^γ`; `γ < 1` steepens
/// the curve around the centre.
#[inline]
pub fn s_curve_value(x: f32, center: f32, strength: f32) -> f32 {
    let x = x.clamp(0.0, 1.0);
    if x <= center {
        if center <= 0.0 {
            return 0.0;
        }
        center - center * (1.0 - x / center).powf(strength)
    } else {
        let span = 1.0 - center;
        center + span * ((x - center) / span).powf(strength)
    }
}

pub fn s_curve(img: &ImageF, center: f32, strength: f32) -> Result<ImageF> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::Param(format!("strength must be > 0, got {strength}")));
    }
    if !(0.0..=1.0).contains(&center) {
        return Err(Error::Param(format!("center must be in [0, 1], got {center}")));
    }
    if strength == 1.0 {
        return Ok(img.clone());
    }
    Ok(img.clone().map_samples(|x| s_curve_value(x, center, strength)))
}

/// Per-channel linear stretch sending the `p_lo` percentile to 0 and `p_hi`
/// to 1. A channel whose two percentiles coincide is left untouched.
pub fn histogram_stretch(img: &ImageF, p_lo: f64, p_hi: f64) -> Result<ImageF> {
    if !(0.0 <= p_lo && p_lo < p_hi && p_hi <= 100.0) {
        return Err(Error::Param(format!("need 0 <= p_lo < p_hi <= 100, got {p_lo} / {p_hi}")));
    }
    let mut out = img.clone();
    for c in 0..3 {
        let sorted = sorted_copy(img.plane(c));
        let lo = percentile_sorted(&sorted, p_lo);
        let hi = percentile_sorted(&sorted, p_hi);
        if !(hi > lo) || (lo == 0.0 && hi == 1.0) {
            continue;
        }
        let scale = 1.0 / (hi - lo);
        for v in out.plane_mut(c) {
            *v = ((*v - lo) * scale).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Drops `cutoff_pct` percent of each histogram tail and stretches the rest
/// to `[0, 1]`.
pub fn autocontrast(img: &ImageF, cutoff_pct: f64) -> Result<ImageF> {
    if !(0.0..50.0).contains(&cutoff_pct) {
        return Err(Error::Param(format!("cutoff must be in [0, 50), got {cutoff_pct}")));
    }
    histogram_stretch(img, cutoff_pct, 100.0 - cutoff_pct)
}

/// Brightens very dark images with a gamma, darkens very bright ones with a
/// curve, and leaves everything in between untouched. The decision uses mean luma.
pub fn conditional_contrast(
    img: &ImageF,
    dark_thresh: f32,
    bright_thresh: f32,
    params: &ToneParams,
) -> Result<ImageF> {
    if !(dark_thresh < bright_thresh) {
        return Err(Error::Param(format!(
            "dark_thresh must be below bright_thresh, got {dark_thresh} / {bright_thresh}"
        )));
    }
    let mean = luma_plane(img).iter().map(|&v| v as f64).sum::<f64>() / img.len() as f64;
    if mean < dark_thresh as f64 {
        if !(params.dark_gamma > 0.0 && params.dark_gamma < 1.0) {
            return Err(Error::Param("dark_gamma must be in (0, 1)".into()));
        }
        let g = params.dark_gamma;
        Ok(img.clone().map_samples(|x| x.clamp(0.0, 1.0).powf(g)))
    } else if mean > bright_thresh as f64 {
        s_curve(img, params.bright_curve_center, params.bright_curve_strength)
    } else {
        Ok(img.clone())
    }
}

/// Naka-Rushton response normalised so that `f(1) = 1`: `x(1+α)/(x+α)`.
#[inline]
pub fn naka_rushton_value(x: f32, alpha: f32) -> f32 {
    let x = x.max(0.0);
    (x * (1.0 + alpha) / (x + alpha)).min(1.0)
}

pub fn naka_rushton(img: &ImageF, alpha: f32) -> Result<ImageF> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Param(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(img.clone().map_samples(|x| naka_rushton_value(x, alpha)))
}

/// Stabiliser inside the log-average luminance.
pub const LOG_MEAN_EPSILON: f64 = 1e-4;

/// Log-average ("key") luminance of a set of luma samples.
pub fn geometric_mean_luminance(samples: impl IntoIterator<Item = f32>) -> f32 {
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for y in samples {
        sum += (y.max(0.0) as f64 + LOG_MEAN_EPSILON).ln();
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    ((sum / n as f64).exp() - LOG_MEAN_EPSILON).max(0.0) as f32
}

/// Tile-adaptive Naka-Rushton. Each of the `grid.0 × grid.1` tiles gets
/// `α = alpha_scale · key`, where `key` is its log-average luminance;
/// α is then bilinearly interpolated between tile centres.
pub fn nite_tonemap(img: &ImageF, grid: (usize, usize), alpha_scale: f32) -> Result<ImageF> {
    let (gx, gy) = grid;
    if gx == 0 || gy == 0 {
        return Err(Error::Param("tile grid must be at least 1x1".into()));
    }
    if !(alpha_scale > 0.0 && alpha_scale.is_finite()) {
        return Err(Error::Param(format!("alpha_scale must be > 0, got {alpha_scale}")));
    }
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = (gx.min(w), gy.min(h));
    let y_plane = luma_plane(img);
    let mut alphas = vec![0.0f32; gx * gy];
    for ty in 0..gy {
        let (y0, y1) = (ty * h / gy, (ty + 1) * h / gy);
        for tx in 0..gx {
            let (x0, x1) = (tx * w / gx, (tx + 1) * w / gx);
            let key = geometric_mean_luminance(
                (y0..y1).flat_map(|y| y_plane[y * w + x0..y * w + x1].iter().copied()),
            );
            let a = alpha_scale * key;
            alphas[ty * gx + tx] = if a > 0.0 { a } else { f32::MIN_POSITIVE };
        }
    }

    let axis = |i: usize, n: usize, tiles: usize| {
        let u = ((i as f32 + 0.5) * tiles as f32 / n as f32 - 0.5).clamp(0.0, (tiles - 1) as f32);
        let lo = u.floor() as usize;
        (lo, (lo + 1).min(tiles - 1), u - lo as f32)
    };
    let cols: Vec<_> = (0..w).map(|x| axis(x, w, gx)).collect();
    let mut out = img.clone();
    for y in 0..h {
        let (r0, r1, ty) = axis(y, h, gy);
        for (x, &(c0, c1, tx)) in cols.iter().enumerate() {
            let a00 = alphas[r0 * gx + c0];
            let a01 = alphas[r0 * gx + c1];
            let a10 = alphas[r1 * gx + c0];
            let a11 = alphas[r1 * gx + c1];
            let top = a00 + tx * (a01 - a00);
            let bot = a10 + tx * (a11 - a10);
            let alpha = top + ty * (bot - top);
            let i = y * w + x;
            for c in 0..3 {
                let v = &mut out.plane_mut(c)[i];
                *v = naka_rushton_value(*v, alpha);
            }
        }
    }
    Ok(out)
}

/// `in + amount·(in − blur(in))` wherever the detail magnitude exceeds `threshold`.
pub fn unsharp_mask(img: &ImageF, radius: f32, amount: f32, threshold: f32) -> Result<ImageF> {
    if !(radius > 0.0) || !(amount >= 0.0) {
        return Err(Error::Param(format!(
            "need radius > 0 and amount >= 0, got {radius} / {amount}"
        )));
    }
    if amount == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for c in 0..3 {
        let blurred = gaussian_blur(img.plane(c), w, h, radius);
        for (v, b) in out.plane_mut(c).iter_mut().zip(blurred) {
            let detail = *v - b;
            if detail.abs() > threshold {
                *v = (*v + amount * detail).clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}

/// Inclusive hue arc in degrees; wraps through 0 when `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HueWindow {
    pub start: f32,
    pub end: f32,
}

impl HueWindow {
    pub fn width(&self) -> f32 {
        (self.end - self.start).rem_euclid(360.0)
    }

    pub fn center(&self) -> f32 {
        (self.start + self.width() / 2.0).rem_euclid(360.0)
    }

    pub fn contains(&self, hue: f32) -> bool {
        (hue - self.start).rem_euclid(360.0) <= self.width()
    }

    fn overlaps(&self, other: &HueWindow) -> bool {
        self.contains(other.start)
            || self.contains(other.end)
            || other.contains(self.start)
            || other.contains(self.end)
    }
}

/// HSV hue in degrees, or `None` for achromatic pixels.
pub fn hue_of(p: [f32; 3]) -> Option<f32> {
    let max = p[0].max(p[1]).max(p[2]);
    let min = p[0].min(p[1]).min(p[2]);
    let d = max - min;
    if d <= 1e-7 {
        return None;
    }
    let h = if max == p[0] {
        60.0 * ((p[1] - p[2]) / d)
    } else if max == p[1] {
        60.0 * ((p[2] - p[0]) / d + 2.0)
    } else {
        60.0 * ((p[0] - p[1]) / d + 4.0)
    };
    Some(h.rem_euclid(360.0))
}

/// Shortest signed angular difference `to − from` in degrees.
fn hue_delta(from: f32, to: f32) -> f32 {
    (to - from + 180.0).rem_euclid(360.0) - 180.0
}

/// Moves `p` to `y + k·(p − y)`, shrinking `k` if needed so every channel
/// stays inside `[0, 1]`.
fn scale_chroma(p: [f32; 3], y: f32, k: f32) -> [f32; 3] {
    let mut k_max = f32::INFINITY;
    for &v in &p {
        let d = v - y;
        if d > 0.0 {
            k_max = k_max.min((1.0 - y) / d);
        } else if d < 0.0 {
            k_max = k_max.min(y / -d);
        }
    }
    let k = if k <= 1.0 { k.min(k_max.max(0.0)) } else { k.min(k_max.max(1.0)) };
    p.map(|v| (y + k * (v - y)).clamp(0.0, 1.0))
}

/// Scales saturation by `factor` for pixels whose hue falls in `hue_window`
/// (every chromatic pixel when `None`). Pixels outside the window are not
/// touched.
pub fn saturation_adjust(img: &ImageF, factor: f32, hue_window: Option<HueWindow>) -> Result<ImageF> {
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(Error::Param(format!("factor must be >= 0, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(img.clone());
    }
    Ok(img.clone().map_pixels(|p| {
        if let Some(win) = hue_window {
            match hue_of(p) {
                Some(h) if win.contains(h) => {}
                _ => return p,
            }
        }
        scale_chroma(p, luma(p), factor)
    }))
}

/// One memory-colour prototype: pixels with hue in `window` are pulled toward
/// `target_hue` and have their saturation multiplied by `sat_gain`, both
/// weighted by a raised-cosine membership that is 1 at the window centre
/// and 0 at its edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryColor {
    pub window: HueWindow,
    pub target_hue: f32,
    pub sat_gain: f32,
}

impl MemoryColor {
    fn membership(&self, hue: f32) -> f32 {
        let half = self.window.width() / 2.0;
        if half <= 0.0 || !self.window.contains(hue) {
            return 0.0;
        }
        let d = hue_delta(self.window.center(), hue).abs();
        if d >= half {
            0.0
        } else {
            0.5 * (1.0 + (std::f32::consts::PI * d / half).cos())
        }
    }
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

pub fn memory_color_enhance(img: &ImageF, prototypes: &[MemoryColor]) -> Result<ImageF> {
    for (i, a) in prototypes.iter().enumerate() {
        if !(a.sat_gain >= 0.0) || !a.target_hue.is_finite() {
            return Err(Error::Param("memory colour gain must be >= 0 and hue finite".into()));
        }
        for b in &prototypes[i + 1..] {
            if a.window.overlaps(&b.window) {
                return Err(Error::Param("memory colour windows overlap".into()));
            }
        }
    }
    if prototypes.is_empty() {
        return Ok(img.clone());
    }
    Ok(img.clone().map_pixels(|p| {
        let Some(hue) = hue_of(p) else { return p };
        let Some((proto, wt)) = prototypes
            .iter()
            .map(|m| (m, m.membership(hue)))
            .find(|&(_, wt)| wt > 0.0)
        else {
            return p;
        };
        let y = luma(p);
        let max = p[0].max(p[1]).max(p[2]);
        let min = p[0].min(p[1]).min(p[2]);
        let new_hue = hue + wt * hue_delta(hue, proto.target_hue);
        let rotated = hsv_to_rgb(new_hue, (max - min) / max, max);
        let shift = y - luma(rotated);
        let shifted = rotated.map(|v| v + shift);
        scale_chroma(shifted, y, 1.0 + wt * (proto.sat_gain - 1.0))
    }))
}

/// Luma-dependent gamma: the exponent is linearly interpolated between
/// `(luma, gamma)` knots (held constant beyond the end knots) and applied to
/// every channel.
pub fn piecewise_gamma(img: &ImageF, knots: &[(f32, f32)]) -> Result<ImageF> {
    if knots.is_empty() {
        return Err(Error::Knot("at least one knot is required".into()));
    }
    for (i, &(x, g)) in knots.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Knot(format!("knot {i} position {x} outside [0, 1]")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Knot(format!("knot {i} gamma {g} must be > 0")));
        }
        if i > 0 && !(x > knots[i - 1].0) {
            return Err(Error::Knot(format!("knot {i} is not after knot {}", i - 1)));
        }
    }
    if knots.iter().all(|&(_, g)| g == 1.0) {
        return Ok(img.clone());
    }
    let gamma_at = |y: f32| -> f32 {
        if y <= knots[0].0 {
            return knots[0].1;
        }
        for pair in knots.windows(2) {
            let ((x0, g0), (x1, g1)) = (pair[0], pair[1]);
            if y <= x1 {
                return g0 + (y - x0) / (x1 - x0) * (g1 - g0);
            }
        }
        knots[knots.len() - 1].1
    };
    Ok(img.clone().map_pixels(|p| {
        let g = gamma_at(luma(p).clamp(0.0, 1.0));
        p.map(|v| v.clamp(0.0, 1.0).powf(g))
    }))
}
