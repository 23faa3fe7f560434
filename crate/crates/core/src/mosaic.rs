//! Raw-domain geometry and reconstruction.

use crate::error::{Error, Result};
use crate::filter::reflect;
use crate::planar::{CfaColor, CfaPattern, ColorSpace, ImageF, MosaicF};
use crate::rawio::{GainMap, Orientation, RawFrame};

/// Maps sensor counts to `[0, 1]` using the frame's black and white levels.
pub fn normalize_levels(raw: &RawFrame) -> MosaicF {
    let black = raw.meta.black_level as f32;
    let scale = 1.0 / (raw.meta.white_level - raw.meta.black_level) as f32;
    let data = raw
        .samples()
        .iter()
        .map(|&v| ((v as f32 - black) * scale).clamp(0.0, 1.0))
        .collect();
    MosaicF::new(raw.width(), raw.height(), data, raw.cfa()).expect("raw frame dimensions are valid")
}

/// Multiplies every sample by its site's shading gain, clamping to `[0, 1]`.
pub fn shading_correct(m: &MosaicF, g: &GainMap) -> Result<MosaicF> {
    if g.width != m.width() || g.height != m.height() {
        return Err(Error::Dimension(format!(
            "gain map is {}x{}, mosaic is {}x{}",
            g.width,
            g.height,
            m.width(),
            m.height()
        )));
    }
    let w = m.width();
    let mut out = m.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = (*v * g.gain_at(i % w, i / w)).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Offsets of the nearest same-colour neighbours of `color` around a site at
/// CFA position `pos`: the 4-neighbourhood when it contains that colour,
/// otherwise the diagonals.
fn neighbour_offsets(cfa: CfaPattern, pos: usize, color: CfaColor) -> Vec<(isize, isize)> {
    let (px, py) = ((pos % 2) as isize, (pos / 2) as isize);
    let has = |dx: isize, dy: isize| {
        cfa.color_at((px + dx).rem_euclid(2) as usize, (py + dy).rem_euclid(2) as usize) == color
    };
    let cross: Vec<_> = [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .into_iter()
        .filter(|&(dx, dy)| has(dx, dy))
        .collect();
    if !cross.is_empty() {
        return cross;
    }
    [(-1, -1), (1, -1), (-1, 1), (1, 1)]
        .into_iter()
        .filter(|&(dx, dy)| has(dx, dy))
        .collect()
}

/// Reads `plane` at `(x, y)`, mirror-reflecting out-of-range coordinates.
#[inline]
fn sample(plane: &[f32], w: usize, h: usize, x: isize, y: isize) -> f32 {
    let xi = if x >= 0 && (x as usize) < w { x as usize } else { reflect(x, w) };
    let yi = if y >= 0 && (y as usize) < h { y as usize } else { reflect(y, h) };
    plane[yi * w + xi]
}

/// Fills missing samples of `color` by averaging the nearest neighbours that
/// carry it. `values` holds valid data at that colour's sites.
fn interpolate_sites(values: &[f32], w: usize, h: usize, cfa: CfaPattern, color: CfaColor) -> Vec<f32> {
    let tables: Vec<Vec<(isize, isize)>> =
        (0..4).map(|pos| neighbour_offsets(cfa, pos, color)).collect();
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if cfa.color_at(x, y) == color {
                out[i] = values[i];
                continue;
            }
            let offs = &tables[CfaPattern::position(x, y)];
            let mut acc = 0.0f32;
            for &(dx, dy) in offs {
                acc += sample(values, w, h, x as isize + dx, y as isize + dy);
            }
            out[i] = acc / offs.len() as f32;
        }
    }
    out
}

/// Bilinear demosaicing with 3×3 neighbourhoods and mirror boundaries.
pub fn demosaic_bilinear(m: &MosaicF) -> ImageF {
    let (w, h, cfa) = (m.width(), m.height(), m.cfa());
    let planes = [CfaColor::R, CfaColor::G, CfaColor::B]
        .map(|c| interpolate_sites(m.data(), w, h, cfa, c));
    ImageF::from_planes(w, h, planes, ColorSpace::CameraLinear).expect("sizes match")
}

/// Directional demosaicing: green is interpolated both horizontally and
/// vertically, the direction with the smaller local colour-difference
/// gradient wins per pixel, and red/blue are rebuilt by bilinear
/// interpolation of their differences to the reconstructed green.
///
/// The iterative refinement pass of the full directional-filtering method is
/// not applied.
pub fn demosaic_menon(m: &MosaicF) -> Result<ImageF> {
    let (w, h, cfa) = (m.width(), m.height(), m.cfa());
    if w < 8 || h < 8 {
        return Err(Error::Dimension(format!(
            "directional demosaic needs at least 8x8, got {w}x{h}"
        )));
    }
    let data = m.data();
    let is_green = |x: usize, y: usize| cfa.color_at(x, y) == CfaColor::G;
    let at = |x: isize, y: isize| sample(data, w, h, x, y);

    // Five-tap directional estimate: [-1/4, 1/2, 1/2, 1/2, -1/4] split into
    // neighbour average plus same-colour Laplacian correction.
    let directional = |x: isize, y: isize, dx: isize, dy: isize| {
        0.5 * (at(x - dx, y - dy) + at(x + dx, y + dy))
            + 0.25 * (2.0 * at(x, y) - at(x - 2 * dx, y - 2 * dy) - at(x + 2 * dx, y + 2 * dy))
    };

    let n = w * h;
    let mut green_h = vec![0.0f32; n];
    let mut green_v = vec![0.0f32; n];
    let mut chroma_h = vec![0.0f32; n];
    let mut chroma_v = vec![0.0f32; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (xi, yi) = (x as isize, y as isize);
            let fh = directional(xi, yi, 1, 0);
            let fv = directional(xi, yi, 0, 1);
            let v = data[i];
            if is_green(x, y) {
                green_h[i] = v;
                green_v[i] = v;
                chroma_h[i] = fh - v;
                chroma_v[i] = fv - v;
            } else {
                green_h[i] = fh;
                green_v[i] = fv;
                chroma_h[i] = v - fh;
                chroma_v[i] = v - fv;
            }
        }
    }

    let mut grad_h = vec![0.0f32; n];
    let mut grad_v = vec![0.0f32; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (xi, yi) = (x as isize, y as isize);
            grad_h[i] = (chroma_h[i] - sample(&chroma_h, w, h, xi + 2, yi)).abs();
            grad_v[i] = (chroma_v[i] - sample(&chroma_v, w, h, xi, yi + 2)).abs();
        }
    }
    drop(chroma_h);
    drop(chroma_v);

    // Classifier weights over a 5×5 window; the transposed kernel is used for
    // the vertical gradients.
    const K: [[f32; 5]; 5] = [
        [1.0, 0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 3.0, 0.0, 3.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 1.0],
    ];
    let mut green = data.to_vec();
    for y in 0..h {
        for x in 0..w {
            if is_green(x, y) {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let mut dh = 0.0f32;
            let mut dv = 0.0f32;
            for (ky, row) in K.iter().enumerate() {
                for (kx, &k) in row.iter().enumerate() {
                    if k == 0.0 {
                        continue;
                    }
                    let (ox, oy) = (kx as isize - 2, ky as isize - 2);
                    dh += k * sample(&grad_h, w, h, xi + ox, yi + oy);
                    dv += k * sample(&grad_v, w, h, xi + oy, yi + ox);
                }
            }
            let i = y * w + x;
            green[i] = (if dv >= dh { green_h[i] } else { green_v[i] }).clamp(0.0, 1.0);
        }
    }

    let mut planes: [Vec<f32>; 3] = Default::default();
    for color in [CfaColor::R, CfaColor::B] {
        let diff: Vec<f32> = data.iter().zip(&green).map(|(&m, &g)| m - g).collect();
        let interp = interpolate_sites(&diff, w, h, cfa, color);
        planes[color.channel()] = interp
            .iter()
            .zip(&green)
            .enumerate()
            .map(|(i, (&d, &g))| {
                if cfa.color_at(i % w, i / w) == color {
                    data[i]
                } else {
                    (g + d).clamp(0.0, 1.0)
                }
            })
            .collect();
    }
    planes[1] = green;
    ImageF::from_planes(w, h, planes, ColorSpace::CameraLinear)
}

/// Per-output-sample source taps along one axis.
struct Taps {
    start: usize,
    weights: Vec<f32>,
}

fn axis_taps(src: usize, dst: usize) -> Vec<Taps> {
    if dst < src {
        // Area average over [i·s/d, (i+1)·s/d).
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let lo = i as f64 * scale;
                let hi = (i + 1) as f64 * scale;
                let start = lo.floor() as usize;
                let end = (hi.ceil() as usize).min(src);
                let weights = (start..end)
                    .map(|j| {
                        let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)).max(0.0);
                        (overlap / scale) as f32
                    })
                    .collect();
                Taps { start, weights }
            })
            .collect()
    } else {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let u = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let start = u.floor() as usize;
                let t = (u - start as f64) as f32;
                if start + 1 < src {
                    Taps {
                        start,
                        weights: vec![1.0 - t, t],
                    }
                } else {
                    Taps {
                        start,
                        weights: vec![1.0],
                    }
                }
            })
            .collect()
    }
}

/// Resamples one plane: area average along shrinking axes, bilinear along
/// growing ones, a copy along unchanged ones.
pub fn resample_plane(src: &[f32], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f32> {
    let horizontal: Vec<f32> = if dw == sw {
        src.to_vec()
    } else {
        let taps = axis_taps(sw, dw);
        let mut out = Vec::with_capacity(dw * sh);
        for y in 0..sh {
            let row = &src[y * sw..(y + 1) * sw];
            for t in &taps {
                let mut acc = 0.0f32;
                for (k, &wt) in t.weights.iter().enumerate() {
                    acc += wt * row[t.start + k];
                }
                out.push(acc);
            }
        }
        out
    };
    if dh == sh {
        return horizontal;
    }
    let taps = axis_taps(sh, dh);
    let mut out = vec![0.0f32; dw * dh];
    for (y, t) in taps.iter().enumerate() {
        let dst = &mut out[y * dw..(y + 1) * dw];
        for (k, &wt) in t.weights.iter().enumerate() {
            let sy = t.start + k;
            let row = &horizontal[sy * dw..(sy + 1) * dw];
            for (o, &v) in dst.iter_mut().zip(row) {
                *o += wt * v;
            }
        }
    }
    out
}

/// Box-filter downscale / bilinear upscale. The colour-space tag is kept.
pub fn resize_box(img: &ImageF, out_w: usize, out_h: usize) -> Result<ImageF> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Dimension(format!("cannot resize to {out_w}x{out_h}")));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let planes = [0, 1, 2].map(|c| resample_plane(img.plane(c), img.width(), img.height(), out_w, out_h));
    ImageF::from_planes(out_w, out_h, planes, img.space())
}

/// Resizes a mosaic while keeping its CFA layout: every site plane is
/// resampled independently and re-interleaved.
pub fn resize_mosaic(m: &MosaicF, out_w: usize, out_h: usize) -> Result<MosaicF> {
    if out_w < 2 || out_h < 2 || out_w % 2 != 0 || out_h % 2 != 0 {
        return Err(Error::Dimension(format!(
            "mosaic resize target must be even and >= 2, got {out_w}x{out_h}"
        )));
    }
    if out_w == m.width() && out_h == m.height() {
        return Ok(m.clone());
    }
    let (pw, ph) = (m.width() / 2, m.height() / 2);
    let (qw, qh) = (out_w / 2, out_h / 2);
    let mut data = vec![0.0f32; out_w * out_h];
    for pos in 0..4 {
        let (ox, oy) = (pos % 2, pos / 2);
        let mut site = Vec::with_capacity(pw * ph);
        for sy in 0..ph {
            for sx in 0..pw {
                site.push(m.at(2 * sx + ox, 2 * sy + oy));
            }
        }
        let resized = resample_plane(&site, pw, ph, qw, qh);
        for sy in 0..qh {
            for sx in 0..qw {
                data[(2 * sy + oy) * out_w + 2 * sx + ox] = resized[sy * qw + sx];
            }
        }
    }
    MosaicF::new(out_w, out_h, data, m.cfa())
}

/// Rotates clockwise by the orientation's angle.
pub fn orient(img: &ImageF, o: Orientation) -> ImageF {
    let (w, h) = (img.width(), img.height());
    let (ow, oh) = match o {
        Orientation::Normal => return img.clone(),
        Orientation::Rotate180 => (w, h),
        Orientation::Rotate90 | Orientation::Rotate270 => (h, w),
    };
    let planes = [0, 1, 2].map(|c| {
        let src = img.plane(c);
        let mut dst = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = match o {
                    Orientation::Rotate90 => (h - 1 - y, x),
                    Orientation::Rotate180 => (w - 1 - x, h - 1 - y),
                    Orientation::Rotate270 => (y, w - 1 - x),
                    Orientation::Normal => unreachable!(),
                };
                dst[ny * ow + nx] = src[y * w + x];
            }
        }
        dst
    });
    ImageF::from_planes(ow, oh, planes, img.space()).expect("rotation keeps sample count")
}
