//! 8-bit quantisation and PNG/JPEG encoding of finished renditions.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageEncoder, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::ImageF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jpeg,
    Png,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Jpeg => "jpg",
            OutputFormat::Png => "png",
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            OutputFormat::Jpeg => "image/jpeg",
            OutputFormat::Png => "image/png",
        }
    }
}

#[inline]
pub fn quantize(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Interleaved 8-bit RGB.
pub fn to_rgb8(img: &ImageF) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let mut buf = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        for c in 0..3 {
            buf.push(quantize(img.plane(c)[i]));
        }
    }
    RgbImage::from_raw(w as u32, h as u32, buf).expect("buffer sized to image")
}

pub fn encode(img: &ImageF, format: OutputFormat, quality: u8) -> Result<Vec<u8>> {
    let rgb = to_rgb8(img);
    let mut out = Vec::new();
    match format {
        OutputFormat::Jpeg => {
            JpegEncoder::new_with_quality(&mut out, quality.clamp(1, 100))
                .write_image(rgb.as_raw(), rgb.width(), rgb.height(), image::ExtendedColorType::Rgb8)
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
        OutputFormat::Png => {
            rgb.write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png)
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
    }
    Ok(out)
}

pub fn write_image(img: &ImageF, path: impl AsRef<Path>, format: OutputFormat, quality: u8) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(img, format, quality)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
