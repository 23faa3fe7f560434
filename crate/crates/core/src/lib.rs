//! Classical ISP pipelines for low-light raw frames and the pairwise
//! forced-choice evaluation machinery used to rank their renditions.
//!
//! The crate is organised by processing domain:
//!
//! * [`rawio`] decodes 16-bit Bayer PNGs with their JSON sidecars and builds
//!   lens-shading gain maps from flat-field captures.
//! * [`mosaic`] covers level normalisation, shading correction, demosaicing,
//!   resizing and orientation.
//! * [`color`], [`denoise`] and [`tone`] hold the per-pixel and neighbourhood
//!   operators.
//! * [`pipeline`] composes operators from declarative presets and times them.
//! * [`evalstudy`] schedules pairs, filters voters and aggregates scores.
//! * [`wire`] holds the JSON bodies of the HTTP service.

pub mod color;
pub mod denoise;
pub mod error;
pub mod evalstudy;
pub mod filter;
pub mod mosaic;
pub mod output;
pub mod pipeline;
pub mod planar;
pub mod rawio;
pub mod tone;
pub mod wire;

pub use error::{Error, Result};
pub use planar::{CfaColor, CfaPattern, ColorSpace, ImageF, MosaicF};
