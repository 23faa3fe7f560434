//! In-memory image containers shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Colour of one CFA site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CfaColor {
    R,
    G,
    B,
}

impl CfaColor {
    /// Plane index of this colour in an RGB image.
    pub fn channel(self) -> usize {
        match self {
            CfaColor::R => 0,
            CfaColor::G => 1,
            CfaColor::B => 2,
        }
    }
}

/// A 2×2 Bayer layout, row-major: `[top-left, top-right, bottom-left, bottom-right]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CfaPattern([CfaColor; 4]);

impl CfaPattern {
    pub const RGGB: CfaPattern = CfaPattern([CfaColor::R, CfaColor::G, CfaColor::G, CfaColor::B]);

    /// Builds a pattern, requiring exactly one R, one B and two G entries.
    pub fn new(sites: [CfaColor; 4]) -> Result<Self> {
        let count = |c| sites.iter().filter(|&&s| s == c).count();
        if count(CfaColor::R) != 1 || count(CfaColor::G) != 2 || count(CfaColor::B) != 1 {
            return Err(Error::Schema("cfa_pattern".into()));
        }
        Ok(CfaPattern(sites))
    }

    pub fn sites(&self) -> [CfaColor; 4] {
        self.0
    }

    /// Index of the 2×2 cell position holding pixel `(x, y)`.
    #[inline]
    pub fn position(x: usize, y: usize) -> usize {
        (y & 1) * 2 + (x & 1)
    }

    #[inline]
    pub fn color_at(&self, x: usize, y: usize) -> CfaColor {
        self.0[Self::position(x, y)]
    }
}

impl fmt::Display for CfaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.0 {
            let c = match s {
                CfaColor::R => 'R',
                CfaColor::G => 'G',
                CfaColor::B => 'B',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for CfaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 4 {
            return Err(Error::Schema("cfa_pattern".into()));
        }
        let mut sites = [CfaColor::G; 4];
        for (slot, ch) in sites.iter_mut().zip(chars) {
            *slot = match ch.to_ascii_uppercase() {
                'R' => CfaColor::R,
                'G' => CfaColor::G,
                'B' => CfaColor::B,
                _ => return Err(Error::Schema("cfa_pattern".into())),
            };
        }
        CfaPattern::new(sites)
    }
}

impl Serialize for CfaPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CfaPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Colour-space tag carried by every [`ImageF`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    CameraLinear,
    Xyz,
    SrgbLinear,
    SrgbEncoded,
    #[serde(rename = "ycbcr")]
    YCbCr,
}

impl ColorSpace {
    /// True for the RGB-like spaces on which per-channel operators make sense.
    pub fn is_rgb(self) -> bool {
        matches!(
            self,
            ColorSpace::CameraLinear | ColorSpace::SrgbLinear | ColorSpace::SrgbEncoded
        )
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColorSpace::CameraLinear => "camera_linear",
            ColorSpace::Xyz => "xyz",
            ColorSpace::SrgbLinear => "srgb_linear",
            ColorSpace::SrgbEncoded => "srgb_encoded",
            ColorSpace::YCbCr => "ycbcr",
        };
        f.write_str(s)
    }
}

/// Three planar `f32` channels tagged with their colour space.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    planes: [Vec<f32>; 3],
    space: ColorSpace,
}

impl ImageF {
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: [Vec<f32>; 3],
        space: ColorSpace,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        if planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::Dimension(format!(
                "plane length does not match {width}x{height}"
            )));
        }
        Ok(ImageF {
            width,
            height,
            planes,
            space,
        })
    }

    /// Constant image.
    pub fn filled(width: usize, height: usize, value: [f32; 3], space: ColorSpace) -> Result<Self> {
        let n = width * height;
        Self::from_planes(
            width,
            height,
            [vec![value[0]; n], vec![value[1]; n], vec![value[2]; n]],
            space,
        )
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        space: ColorSpace,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let n = width * height;
        let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c]);
                }
            }
        }
        Self::from_planes(width, height, planes, space)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    /// Retags the image without touching samples.
    pub fn with_space(mut self, space: ColorSpace) -> Self {
        self.space = space;
        self
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        &self.planes[c]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<f32>; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f32>; 3] {
        self.planes
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, px: [f32; 3]) {
        let i = y * self.width + x;
        for c in 0..3 {
            self.planes[c][i] = px[c];
        }
    }

    /// Applies `f` to every pixel in place.
    pub fn map_pixels(mut self, mut f: impl FnMut([f32; 3]) -> [f32; 3]) -> Self {
        let [r, g, b] = &mut self.planes;
        for ((r, g), b) in r.iter_mut().zip(g.iter_mut()).zip(b.iter_mut()) {
            let out = f([*r, *g, *b]);
            *r = out[0];
            *g = out[1];
            *b = out[2];
        }
        self
    }

    /// Applies `f` to every sample of every plane in place.
    pub fn map_samples(mut self, mut f: impl FnMut(f32) -> f32) -> Self {
        for p in &mut self.planes {
            for v in p.iter_mut() {
                *v = f(*v);
            }
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.planes.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Per-channel arithmetic mean, accumulated in `f64`.
    pub fn channel_means(&self) -> [f64; 3] {
        let n = self.len() as f64;
        let mut out = [0.0; 3];
        for (c, p) in self.planes.iter().enumerate() {
            out[c] = p.iter().map(|&v| v as f64).sum::<f64>() / n;
        }
        out
    }

    pub fn channel_stats(&self) -> Vec<ChannelStats> {
        self.planes.iter().map(|p| ChannelStats::of(p)).collect()
    }
}

/// Minimum, maximum and mean of one plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ChannelStats {
    pub fn of(samples: &[f32]) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in samples {
            let v = v as f64;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        if samples.is_empty() {
            return ChannelStats {
                min: 0.0,
                max: 0.0,
                mean: 0.0,
            };
        }
        ChannelStats {
            min,
            max,
            mean: sum / samples.len() as f64,
        }
    }
}

/// Single-plane floating-point Bayer mosaic, usually level-normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MosaicF {
    width: usize,
    height: usize,
    data: Vec<f32>,
    cfa: CfaPattern,
}

impl MosaicF {
    pub fn new(width: usize, height: usize, data: Vec<f32>, cfa: CfaPattern) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::Dimension(format!(
                "mosaic must have even, non-zero dimensions, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "mosaic has {} samples, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(MosaicF {
            width,
            height,
            data,
            cfa,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cfa(&self) -> CfaPattern {
        self.cfa
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Re-samples an RGB image onto a Bayer lattice. Used to build synthetic
/// mosaics with a known ground truth.
pub fn mosaic_from_rgb(img: &ImageF, cfa: CfaPattern) -> Result<MosaicF> {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = cfa.color_at(x, y).channel();
            data.push(img.plane(c)[y * w + x]);
        }
    }
    MosaicF::new(w, h, data, cfa)
}
