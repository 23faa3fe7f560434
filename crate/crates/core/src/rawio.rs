//! Challenge-format inputs: single-channel 16-bit Bayer PNGs with a JSON
//! sidecar, and flat-field calibration frames turned into shading gain maps.
//!
//! Sidecar fields (unknown fields are ignored):
//!
//! | field             | required | form                                           |
//! |-------------------|----------|------------------------------------------------|
//! | `black_level`     | yes      | number, or array of per-site numbers (averaged) |
//! | `white_level`     | yes      | number, or array (averaged)                    |
//! | `cfa_pattern`     | yes      | `"RGGB"`-style string                           |
//! | `as_shot_neutral` | yes      | `[r, g, b]`, all positive                       |
//! | `color_matrix`    | no       | camera→XYZ, 3×3 nested or flat 9; falls back to the dataset-mean matrix |
//! | `orientation`     | no       | `"normal"`, `"rotate90"`, `"rotate180"`, `"rotate270"` or EXIF 1/6/3/8 |
//! | `noise_profile`   | no       | `[a, b]` or `{"a": .., "b": ..}` for σ²(x) = a·x + b |
//! | `frame_id`        | no       | string; defaults to the PNG file stem           |

use std::fs;
use std::io::{BufReader, BufWriter, Cursor};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::color;
use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::planar::{CfaPattern, MosaicF};

pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Normal,
    Rotate90,
    Rotate180,
    Rotate270,
}

impl Orientation {
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => match s.to_ascii_lowercase().as_str() {
                "normal" => Some(Orientation::Normal),
                "rotate90" => Some(Orientation::Rotate90),
                "rotate180" => Some(Orientation::Rotate180),
                "rotate270" => Some(Orientation::Rotate270),
                _ => None,
            },
            // EXIF orientation tags for the four pure rotations.
            Value::Number(n) => match n.as_u64()? {
                1 => Some(Orientation::Normal),
                6 => Some(Orientation::Rotate90),
                3 => Some(Orientation::Rotate180),
                8 => Some(Orientation::Rotate270),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Affine signal-dependent noise model σ²(x) = a·x + b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub a: f64,
    pub b: f64,
}

impl NoiseProfile {
    pub fn sigma_at(&self, x: f64) -> f64 {
        (self.a * x + self.b).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub black_level: f64,
    pub white_level: f64,
    pub as_shot_neutral: [f64; 3],
    /// Camera → XYZ.
    pub cst: Matrix3,
    pub orientation: Orientation,
    pub noise_profile: Option<NoiseProfile>,
    pub frame_id: String,
}

impl FrameMeta {
    pub fn validate(&self) -> Result<()> {
        let (b, w) = (self.black_level, self.white_level);
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::Schema("black_level".into()));
        }
        if !(w.is_finite() && w > b && w <= 65535.0) {
            return Err(Error::Schema("white_level".into()));
        }
        if self
            .as_shot_neutral
            .iter()
            .any(|&v| !(v.is_finite() && v > 0.0))
        {
            return Err(Error::Schema("as_shot_neutral".into()));
        }
        if self.cst.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema("color_matrix".into()));
        }
        if let Some(np) = self.noise_profile {
            if !(np.a.is_finite() && np.b.is_finite()) {
                return Err(Error::Schema("noise_profile".into()));
            }
        }
        Ok(())
    }
}

/// One decoded Bayer frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    width: usize,
    height: usize,
    samples: Vec<u16>,
    cfa: CfaPattern,
    pub meta: FrameMeta,
}

impl RawFrame {
    pub fn new(
        width: usize,
        height: usize,
        samples: Vec<u16>,
        cfa: CfaPattern,
        meta: FrameMeta,
    ) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::Dimension(format!(
                "raw frame must have even, non-zero dimensions, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        meta.validate()?;
        Ok(RawFrame {
            width,
            height,
            samples,
            cfa,
            meta,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn cfa(&self) -> CfaPattern {
        self.cfa
    }
}

/// Reads a frame from its PNG and JSON sidecar.
pub fn load_raw(png_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<RawFrame> {
    let png_path = png_path.as_ref();
    let json_path = json_path.as_ref();
    let png_bytes = fs::read(png_path).map_err(|e| Error::io(png_path, e))?;
    let json = fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
    let stem = png_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_raw(&png_bytes, &json, &stem)
}

/// Decodes an in-memory PNG + sidecar pair. `default_id` names the frame when
/// the sidecar has no `frame_id`.
pub fn decode_raw(png_bytes: &[u8], sidecar: &str, default_id: &str) -> Result<RawFrame> {
    let (width, height, samples) = decode_png16(png_bytes)?;
    let (cfa, meta) = parse_sidecar(sidecar, default_id)?;
    RawFrame::new(width, height, samples, cfa, meta)
}

/// Sidecar path conventionally paired with a mosaic PNG: same stem, `.json`.
pub fn sidecar_path(png_path: &Path) -> std::path::PathBuf {
    png_path.with_extension("json")
}

fn decode_png16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Sixteen {
        return Err(Error::Decode(format!(
            "expected single-channel 16-bit PNG, got {color:?} at {depth:?}"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let samples = buf[..info.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((w, h, samples))
}

/// Encodes a mosaic as a single-channel 16-bit PNG.
pub fn encode_png16(width: usize, height: usize, samples: &[u16]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_be_bytes()).collect();
        writer
            .write_image_data(&bytes)
            .map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// Writes `frame` as `<png_path>` plus its sidecar next to it.
pub fn save_raw(frame: &RawFrame, png_path: impl AsRef<Path>) -> Result<()> {
    let png_path = png_path.as_ref();
    let bytes = encode_png16(frame.width, frame.height, &frame.samples)?;
    fs::write(png_path, bytes).map_err(|e| Error::io(png_path, e))?;
    let json_path = sidecar_path(png_path);
    let doc = sidecar_json(frame);
    let text = serde_json::to_string_pretty(&doc).expect("sidecar serialises");
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

/// Sidecar document describing `frame`.
pub fn sidecar_json(frame: &RawFrame) -> Value {
    let m = &frame.meta;
    let mut doc = serde_json::json!({
        "frame_id": m.frame_id,
        "black_level": m.black_level,
        "white_level": m.white_level,
        "cfa_pattern": frame.cfa.to_string(),
        "as_shot_neutral": m.as_shot_neutral,
        "color_matrix": m.cst,
        "orientation": m.orientation,
    });
    if let Some(np) = m.noise_profile {
        doc["noise_profile"] = serde_json::json!([np.a, np.b]);
    }
    doc
}

fn schema(field: &str) -> Error {
    Error::Schema(field.to_string())
}

fn number_or_mean(v: Option<&Value>, field: &str) -> Result<f64> {
    match v {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| schema(field)),
        Some(Value::Array(items)) if !items.is_empty() => {
            let mut sum = 0.0;
            for it in items {
                sum += it.as_f64().ok_or_else(|| schema(field))?;
            }
            Ok(sum / items.len() as f64)
        }
        _ => Err(schema(field)),
    }
}

fn vec3(v: &Value, field: &str) -> Result<[f64; 3]> {
    let items = v.as_array().ok_or_else(|| schema(field))?;
    if items.len() != 3 {
        return Err(schema(field));
    }
    let mut out = [0.0; 3];
    for (o, it) in out.iter_mut().zip(items) {
        *o = it.as_f64().ok_or_else(|| schema(field))?;
    }
    Ok(out)
}

fn matrix3(v: &Value, field: &str) -> Result<Matrix3> {
    let items = v.as_array().ok_or_else(|| schema(field))?;
    let mut m = [[0.0; 3]; 3];
    match items.len() {
        3 => {
            for (row, it) in m.iter_mut().zip(items) {
                *row = vec3(it, field)?;
            }
        }
        9 => {
            for (i, it) in items.iter().enumerate() {
                m[i / 3][i % 3] = it.as_f64().ok_or_else(|| schema(field))?;
            }
        }
        _ => return Err(schema(field)),
    }
    Ok(m)
}

/// Parses a sidecar document into the CFA layout and frame metadata.
pub fn parse_sidecar(text: &str, default_id: &str) -> Result<(CfaPattern, FrameMeta)> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::Decode(format!("sidecar JSON: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Decode("sidecar must be a JSON object".into()))?;

    let black_level = number_or_mean(obj.get("black_level"), "black_level")?;
    let white_level = number_or_mean(obj.get("white_level"), "white_level")?;
    let cfa: CfaPattern = obj
        .get("cfa_pattern")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("cfa_pattern"))?
        .parse()?;
    let as_shot_neutral = vec3(
        obj.get("as_shot_neutral")
            .ok_or_else(|| schema("as_shot_neutral"))?,
        "as_shot_neutral",
    )?;
    let cst = match obj.get("color_matrix") {
        None | Some(Value::Null) => color::config().dataset_mean_cst,
        Some(v) => matrix3(v, "color_matrix")?,
    };
    let orientation = match obj.get("orientation") {
        None | Some(Value::Null) => Orientation::Normal,
        Some(v) => Orientation::from_json(v).ok_or_else(|| schema("orientation"))?,
    };
    let noise_profile = match obj.get("noise_profile") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) if items.len() == 2 => Some(NoiseProfile {
            a: items[0].as_f64().ok_or_else(|| schema("noise_profile"))?,
            b: items[1].as_f64().ok_or_else(|| schema("noise_profile"))?,
        }),
        Some(v @ Value::Object(_)) => Some(
            serde_json::from_value::<NoiseProfile>(v.clone())
                .map_err(|_| schema("noise_profile"))?,
        ),
        Some(_) => return Err(schema("noise_profile")),
    };
    let frame_id = match obj.get("frame_id") {
        None | Some(Value::Null) => default_id.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("frame_id")),
    };

    let meta = FrameMeta {
        black_level,
        white_level,
        as_shot_neutral,
        cst,
        orientation,
        noise_profile,
        frame_id,
    };
    meta.validate()?;
    Ok((cfa, meta))
}

/// Multiplicative lens-shading correction, one gain field per 2×2 CFA site.
///
/// Each field is a `grid_width × grid_height` lattice spanning the frame's
/// half-resolution site plane. When the grid matches that plane exactly the
/// lookup is a direct index; coarser grids are bilinearly upsampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    pub width: usize,
    pub height: usize,
    pub cfa_pattern: CfaPattern,
    pub gain_cap: f32,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Indexed by CFA cell position (`0` top-left … `3` bottom-right).
    pub planes: [Vec<f32>; 4],
}

impl GainMap {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(Error::Dimension("gain map frame size must be even".into()));
        }
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(Error::Dimension("gain map grid is empty".into()));
        }
        let n = self.grid_width * self.grid_height;
        for p in &self.planes {
            if p.len() != n {
                return Err(Error::Dimension("gain map plane size mismatch".into()));
            }
            if p.iter().any(|&g| !g.is_finite() || g < 1.0 || g > self.gain_cap) {
                return Err(Error::Param("gain map values outside [1, gain_cap]".into()));
            }
        }
        Ok(())
    }

    fn site_plane_size(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    fn is_full_resolution(&self) -> bool {
        self.site_plane_size() == (self.grid_width, self.grid_height)
    }

    /// Gain applied to mosaic sample `(x, y)`.
    pub fn gain_at(&self, x: usize, y: usize) -> f32 {
        let plane = &self.planes[CfaPattern::position(x, y)];
        let (sx, sy) = (x / 2, y / 2);
        if self.is_full_resolution() {
            return plane[sy * self.grid_width + sx];
        }
        let (pw, ph) = self.site_plane_size();
        let u = ((sx as f32 + 0.5) * self.grid_width as f32 / pw as f32 - 0.5)
            .clamp(0.0, (self.grid_width - 1) as f32);
        let v = ((sy as f32 + 0.5) * self.grid_height as f32 / ph as f32 - 0.5)
            .clamp(0.0, (self.grid_height - 1) as f32);
        let (x0, y0) = (u.floor() as usize, v.floor() as usize);
        let (x1, y1) = (
            (x0 + 1).min(self.grid_width - 1),
            (y0 + 1).min(self.grid_height - 1),
        );
        let (tx, ty) = (u - x0 as f32, v - y0 as f32);
        let g = |xx: usize, yy: usize| plane[yy * self.grid_width + xx];
        let top = g(x0, y0) + tx * (g(x1, y0) - g(x0, y0));
        let bot = g(x0, y1) + tx * (g(x1, y1) - g(x0, y1));
        top + ty * (bot - top)
    }

    /// Box-averages each field down to at most `max_w × max_h` cells, for
    /// compact storage. Gains remain within `[1, gain_cap]`.
    pub fn coarsen(&self, max_w: usize, max_h: usize) -> GainMap {
        let gw = self.grid_width.min(max_w.max(1));
        let gh = self.grid_height.min(max_h.max(1));
        if gw == self.grid_width && gh == self.grid_height {
            return self.clone();
        }
        let planes = self.planes.clone().map(|p| {
            crate::mosaic::resample_plane(&p, self.grid_width, self.grid_height, gw, gh)
                .into_iter()
                .map(|g| g.clamp(1.0, self.gain_cap))
                .collect()
        });
        GainMap {
            grid_width: gw,
            grid_height: gh,
            planes,
            ..self.clone()
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)
            .map_err(|e| Error::Encode(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GainMap> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: GainMap =
            serde_json::from_str(&text).map_err(|e| Error::Decode(format!("gain map: {e}")))?;
        map.validate()?;
        Ok(map)
    }
}

/// Gaussian smoothing with point-symmetric padding (`f(-i) = 2f(0) - f(i)`),
/// so that a falloff keeps its slope at the frame edge instead of flattening.
fn smooth_flat_field(src: &[f32], w: usize, h: usize, sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return src.to_vec();
    }
    let pad = (3.0 * sigma).ceil() as usize;
    let extend = |line: &[f32]| -> Vec<f32> {
        let n = line.len();
        let at = |i: isize| -> f32 {
            if i < 0 {
                2.0 * line[0] - line[((-i) as usize).min(n - 1)]
            } else if i as usize >= n {
                let over = i as usize - (n - 1);
                2.0 * line[n - 1] - line[(n - 1).saturating_sub(over)]
            } else {
                line[i as usize]
            }
        };
        (-(pad as isize)..(n + pad) as isize).map(at).collect()
    };
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let rows: Vec<Vec<f32>> = src.chunks(w).map(|r| extend(r)).collect();
    let mut padded = vec![0.0f32; pw * ph];
    for x in 0..pw {
        let col: Vec<f32> = rows.iter().map(|r| r[x]).collect();
        for (y, v) in extend(&col).into_iter().enumerate() {
            padded[y * pw + x] = v;
        }
    }
    let blurred = gaussian_blur(&padded, pw, ph, sigma);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&blurred[(y + pad) * pw + pad..(y + pad) * pw + pad + w]);
    }
    out
}

/// Builds a shading gain map from a flat-field calibration capture.
///
/// `smoothing_sigma` is in mosaic pixels; each CFA site plane is blurred at
/// half that σ since it is sampled every second pixel.
pub fn build_gain_map(calibration: &RawFrame, smoothing_sigma: f32, gain_cap: f32) -> Result<GainMap> {
    let plane = crate::mosaic::normalize_levels(calibration);
    build_gain_map_from_mosaic(&plane, smoothing_sigma, gain_cap)
}

/// [`build_gain_map`] on an already level-normalised (or averaged) mosaic.
pub fn build_gain_map_from_mosaic(m: &MosaicF, smoothing_sigma: f32, gain_cap: f32) -> Result<GainMap> {
    if !(gain_cap.is_finite() && gain_cap >= 1.0) {
        return Err(Error::Param(format!("gain_cap must be >= 1, got {gain_cap}")));
    }
    if !(smoothing_sigma.is_finite() && smoothing_sigma >= 0.0) {
        return Err(Error::Param(format!(
            "smoothing_sigma must be >= 0, got {smoothing_sigma}"
        )));
    }
    let (w, h) = (m.width(), m.height());
    let (pw, ph) = (w / 2, h / 2);
    let mut planes: [Vec<f32>; 4] = Default::default();
    for (pos, plane) in planes.iter_mut().enumerate() {
        let (ox, oy) = (pos % 2, pos / 2);
        let mut site = Vec::with_capacity(pw * ph);
        for sy in 0..ph {
            for sx in 0..pw {
                site.push(m.at(2 * sx + ox, 2 * sy + oy));
            }
        }
        let smooth = smooth_flat_field(&site, pw, ph, smoothing_sigma / 2.0);
        if let Some(bad) = smooth.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::DegenerateCalibration(format!(
                "smoothed site plane {pos} is non-positive at ({}, {})",
                2 * (bad % pw) + ox,
                2 * (bad / pw) + oy
            )));
        }
        let peak = smooth.iter().copied().fold(f32::MIN, f32::max);
        *plane = smooth
            .into_iter()
            .map(|v| (peak / v).clamp(1.0, gain_cap))
            .collect();
    }
    Ok(GainMap {
        width: w,
        height: h,
        cfa_pattern: m.cfa(),
        gain_cap,
        grid_width: pw,
        grid_height: ph,
        planes,
    })
}
