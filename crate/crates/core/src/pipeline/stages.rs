use crate::color::{self, Illuminant};
use crate::denoise::{self, NlmParams, NoiseEstimate};
use crate::error::{Error, Result};
use crate::mosaic;
use crate::planar::{ColorSpace, ImageF, MosaicF};
use crate::rawio::{GainMap, Matrix3, Orientation};
use crate::tone::{self, HueWindow, MemoryColor, ToneParams};

use super::params::{ensure, ParamReader, ParamResult};
use super::{DataSpace, OutputSpec, Registry, RunContext, Stage, Work};

type ImageFn = Box<dyn Fn(&ImageF, &RunContext<'_>) -> Result<ImageF> + Send + Sync>;
type MosaicFn = Box<dyn Fn(&MosaicF, &RunContext<'_>) -> Result<MosaicF> + Send + Sync>;

/// Which image spaces an image stage takes and what it produces.
enum Accept {
    /// Any RGB-like space, unchanged.
    Rgb,
    /// RGB-like spaces or YCbCr, unchanged.
    RgbOrYcc,
    /// Any image space, unchanged.
    AnyImage,
    /// One of `from`, producing `to`.
    Convert { from: Vec<ColorSpace>, to: ColorSpace },
}

struct ImageStage {
    accept: Accept,
    f: ImageFn,
}

impl Stage for ImageStage {
    fn output_space(&self, input: DataSpace) -> Option<DataSpace> {
        let DataSpace::Image(cs) = input else { return None };
        let out = match &self.accept {
            Accept::Rgb => cs.is_rgb().then_some(cs),
            Accept::RgbOrYcc => (cs.is_rgb() || cs == ColorSpace::YCbCr).then_some(cs),
            Accept::AnyImage => Some(cs),
            Accept::Convert { from, to } => from.contains(&cs).then_some(*to),
        }?;
        Some(DataSpace::Image(out))
    }

    fn expects(&self) -> String {
        match &self.accept {
            Accept::Rgb => "an RGB image".into(),
            Accept::RgbOrYcc => "an RGB or ycbcr image".into(),
            Accept::AnyImage => "an image".into(),
            Accept::Convert { from, .. } => {
                let names: Vec<String> = from.iter().map(|c| c.to_string()).collect();
                names.join(" or ")
            }
        }
    }

    fn apply<'a>(&self, input: Work<'a>, ctx: &RunContext<'_>) -> Result<Work<'a>> {
        match input {
            Work::Image(img) => Ok(Work::Image((self.f)(&img, ctx)?)),
            other => Err(Error::Dimension(format!("expected an image, got {}", other.space()))),
        }
    }
}

fn image_stage(
    accept: Accept,
    f: impl Fn(&ImageF, &RunContext<'_>) -> Result<ImageF> + Send + Sync + 'static,
) -> ParamResult<Box<dyn Stage>> {
    Ok(Box::new(ImageStage {
        accept,
        f: Box::new(f),
    }))
}

struct MosaicStage {
    f: MosaicFn,
}

impl Stage for MosaicStage {
    fn output_space(&self, input: DataSpace) -> Option<DataSpace> {
        (input == DataSpace::Mosaic).then_some(DataSpace::Mosaic)
    }

    fn expects(&self) -> String {
        "mosaic".into()
    }

    fn apply<'a>(&self, input: Work<'a>, ctx: &RunContext<'_>) -> Result<Work<'a>> {
        match input {
            Work::Mosaic(m) => Ok(Work::Mosaic((self.f)(&m, ctx)?)),
            other => Err(Error::Dimension(format!("expected a mosaic, got {}", other.space()))),
        }
    }
}

fn mosaic_stage(
    f: impl Fn(&MosaicF, &RunContext<'_>) -> Result<MosaicF> + Send + Sync + 'static,
) -> ParamResult<Box<dyn Stage>> {
    Ok(Box::new(MosaicStage { f: Box::new(f) }))
}

struct NormalizeLevels;

impl Stage for NormalizeLevels {
    fn output_space(&self, input: DataSpace) -> Option<DataSpace> {
        (input == DataSpace::Raw).then_some(DataSpace::Mosaic)
    }

    fn expects(&self) -> String {
        "raw".into()
    }

    fn apply<'a>(&self, input: Work<'a>, _: &RunContext<'_>) -> Result<Work<'a>> {
        match input {
            Work::Raw(raw) => Ok(Work::Mosaic(mosaic::normalize_levels(raw))),
            other => Err(Error::Dimension(format!("expected raw, got {}", other.space()))),
        }
    }
}

struct Demosaic {
    menon: bool,
}

impl Stage for Demosaic {
    fn output_space(&self, input: DataSpace) -> Option<DataSpace> {
        (input == DataSpace::Mosaic).then_some(DataSpace::Image(ColorSpace::CameraLinear))
    }

    fn expects(&self) -> String {
        "mosaic".into()
    }

    fn apply<'a>(&self, input: Work<'a>, _: &RunContext<'_>) -> Result<Work<'a>> {
        match input {
            Work::Mosaic(m) => Ok(Work::Image(if self.menon {
                mosaic::demosaic_menon(&m)?
            } else {
                mosaic::demosaic_bilinear(&m)
            })),
            other => Err(Error::Dimension(format!("expected a mosaic, got {}", other.space()))),
        }
    }
}

fn rgb_spaces() -> Vec<ColorSpace> {
    vec![ColorSpace::CameraLinear, ColorSpace::SrgbLinear, ColorSpace::SrgbEncoded]
}

fn positive(name: &str, v: f32) -> ParamResult<()> {
    ensure(v > 0.0 && v.is_finite(), || format!("`{name}` must be > 0, got {v}"))
}

fn non_negative(name: &str, v: f32) -> ParamResult<()> {
    ensure(v >= 0.0 && v.is_finite(), || format!("`{name}` must be >= 0, got {v}"))
}

fn unit(name: &str, v: f32) -> ParamResult<()> {
    ensure((0.0..=1.0).contains(&v), || format!("`{name}` must be in [0, 1], got {v}"))
}

/// Target size from explicit `width`/`height`, or the output canvas in the
/// orientation of the incoming data.
#[derive(Clone, Copy)]
enum Target {
    Fixed(usize, usize),
    Canvas(usize, usize),
}

impl Target {
    fn read(p: &mut ParamReader<'_>, out: &OutputSpec) -> ParamResult<Self> {
        let w: Option<usize> = p.get("width")?;
        let h: Option<usize> = p.get("height")?;
        match (w, h) {
            (Some(w), Some(h)) => {
                ensure(w >= 2 && h >= 2, || format!("size {w}x{h} must be at least 2x2"))?;
                Ok(Target::Fixed(w, h))
            }
            (None, None) => Ok(Target::Canvas(out.width, out.height)),
            _ => Err("give both `width` and `height`, or neither".into()),
        }
    }

    fn resolve(self, w: usize, h: usize) -> (usize, usize) {
        match self {
            Target::Fixed(tw, th) => (tw, th),
            Target::Canvas(cw, ch) => OutputSpec {
                width: cw,
                height: ch,
                ..OutputSpec::default()
            }
            .canvas_for(w, h),
        }
    }
}

fn gain_clamp(p: &mut ParamReader<'_>, default: Option<[f64; 2]>) -> ParamResult<Option<[f64; 2]>> {
    let c: Option<[f64; 2]> = p.get("gain_clamp")?;
    let c = c.or(default);
    if let Some([lo, hi]) = c {
        ensure(lo > 0.0 && lo <= hi && hi.is_finite(), || {
            format!("`gain_clamp` must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
        })?;
    }
    Ok(c)
}

fn balance(img: &ImageF, illum: Illuminant, clamp: Option<[f64; 2]>) -> ImageF {
    let illum = match clamp {
        Some([lo, hi]) => illum.clamp_gains(lo, hi),
        None => illum,
    };
    let out = color::apply_wb(img, &illum);
    if img.space() == ColorSpace::SrgbEncoded {
        out.map_samples(|v| v.clamp(0.0, 1.0))
    } else {
        out
    }
}

pub(super) fn register_builtins(r: &mut Registry) {
    r.register("normalize_levels", |_, _| Ok(Box::new(NormalizeLevels)));

    r.register("shading_correct", |p, _| {
        let path: Option<String> = p.get("gain_map")?;
        let required: bool = p.or("required", false)?;
        let fixed = match path {
            Some(path) => Some(GainMap::load(&path).map_err(|e| format!("`gain_map`: {e}"))?),
            None => None,
        };
        mosaic_stage(move |m, ctx| match fixed.as_ref().or(ctx.gain_map) {
            Some(g) => mosaic::shading_correct(m, g),
            None if required => Err(Error::Param("shading_correct requires a gain map".into())),
            None => Ok(m.clone()),
        })
    });

    r.register("resize_mosaic", |p, out| {
        let target = Target::read(p, out)?;
        if let Target::Fixed(w, h) = target {
            ensure(w % 2 == 0 && h % 2 == 0, || format!("mosaic size {w}x{h} must be even"))?;
        }
        mosaic_stage(move |m, _| {
            let (w, h) = target.resolve(m.width(), m.height());
            if (w, h) == (m.width(), m.height()) {
                return Ok(m.clone());
            }
            mosaic::resize_mosaic(m, w & !1, h & !1)
        })
    });

    r.register("demosaic_bilinear", |_, _| Ok(Box::new(Demosaic { menon: false })));
    r.register("demosaic_menon", |_, _| Ok(Box::new(Demosaic { menon: true })));

    r.register("resize", |p, out| {
        let target = Target::read(p, out)?;
        image_stage(Accept::AnyImage, move |img, _| {
            let (w, h) = target.resolve(img.width(), img.height());
            mosaic::resize_box(img, w, h)
        })
    });

    r.register("orient", |p, _| {
        let fixed: Option<Orientation> = p.get("orientation")?;
        image_stage(Accept::AnyImage, move |img, ctx| {
            Ok(mosaic::orient(img, fixed.unwrap_or(ctx.meta.orientation)))
        })
    });

    r.register("wb_metadata", |p, _| {
        let clamp = gain_clamp(p, None)?;
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::CameraLinear],
                to: ColorSpace::CameraLinear,
            },
            move |img, ctx| Ok(balance(img, Illuminant::new(ctx.meta.as_shot_neutral)?, clamp)),
        )
    });

    r.register("wb_gray_world", |p, _| {
        let clamp = gain_clamp(p, None)?;
        image_stage(Accept::Rgb, move |img, _| Ok(balance(img, color::gray_world(img)?, clamp)))
    });

    r.register("wb_white_patch", |p, _| {
        let samples: usize = p.or("samples_per_trial", 256)?;
        let trials: usize = p.or("trials", 100)?;
        ensure(samples >= 1 && trials >= 1, || "`samples_per_trial` and `trials` must be >= 1".into())?;
        let clamp = gain_clamp(p, Some([0.5, 4.0]))?;
        image_stage(Accept::Rgb, move |img, ctx| {
            let illum = color::white_patch_subsampled(img, samples, trials, ctx.seed)?;
            Ok(balance(img, illum, clamp))
        })
    });

    r.register("wb_grayness_index", |p, _| {
        let blur_sigma: f32 = p.or("blur_sigma", 3.0)?;
        let top_fraction: f64 = p.or("top_fraction", 0.01)?;
        non_negative("blur_sigma", blur_sigma)?;
        ensure(top_fraction > 0.0 && top_fraction <= 1.0, || {
            format!("`top_fraction` must be in (0, 1], got {top_fraction}")
        })?;
        let clamp = gain_clamp(p, None)?;
        image_stage(Accept::Rgb, move |img, _| {
            Ok(balance(img, color::grayness_index(img, blur_sigma, top_fraction)?, clamp))
        })
    });

    r.register("camera_to_xyz", |p, _| {
        let fixed: Option<Matrix3> = p.get("matrix")?;
        if let Some(m) = fixed {
            ensure(m.iter().flatten().all(|v| v.is_finite()), || "`matrix` must be finite".into())?;
        }
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::CameraLinear],
                to: ColorSpace::Xyz,
            },
            move |img, ctx| Ok(color::camera_to_xyz(img, fixed.as_ref().unwrap_or(&ctx.meta.cst))),
        )
    });

    r.register("xyz_to_srgb_linear", |_, _| {
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::Xyz],
                to: ColorSpace::SrgbLinear,
            },
            |img, _| Ok(color::xyz_to_srgb_linear(img)),
        )
    });

    r.register("encode_srgb", |_, _| {
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::SrgbLinear],
                to: ColorSpace::SrgbEncoded,
            },
            |img, _| Ok(color::encode_srgb(img)),
        )
    });

    r.register("decode_srgb", |_, _| {
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::SrgbEncoded],
                to: ColorSpace::SrgbLinear,
            },
            |img, _| Ok(color::decode_srgb(img)),
        )
    });

    r.register("rgb_to_ycbcr", |_, _| {
        image_stage(
            Accept::Convert {
                from: rgb_spaces(),
                to: ColorSpace::YCbCr,
            },
            |img, _| Ok(color::rgb_to_ycbcr(img)),
        )
    });

    r.register("ycbcr_to_rgb", |p, _| {
        let space: ColorSpace = p.or("space", ColorSpace::SrgbEncoded)?;
        ensure(space.is_rgb(), || format!("`space` must be an RGB space, got {space}"))?;
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::YCbCr],
                to: space,
            },
            move |img, _| Ok(color::ycbcr_to_rgb(img, space)),
        )
    });

    r.register("nlm_denoise", |p, _| {
        let d = NlmParams::default();
        let params = NlmParams {
            k_luma: p.or("k_luma", d.k_luma)?,
            k_chroma: p.or("k_chroma", d.k_chroma)?,
            patch: p.or("patch", d.patch)?,
            window: p.or("window", d.window)?,
        };
        params.validate().map_err(|e| e.to_string())?;
        let fixed: Option<f32> = p.get("sigma")?;
        if let Some(s) = fixed {
            non_negative("sigma", s)?;
        }
        image_stage(Accept::RgbOrYcc, move |img, _| {
            let sigma = match fixed {
                Some(sigma) => NoiseEstimate { sigma },
                None => denoise::estimate_noise_sigma(img),
            };
            denoise::nlm_denoise(img, sigma, &params)
        })
    });

    r.register("gaussian_chroma", |p, _| {
        let sigma: f32 = p.or("sigma", 2.0)?;
        non_negative("sigma", sigma)?;
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::YCbCr],
                to: ColorSpace::YCbCr,
            },
            move |img, _| Ok(denoise::gaussian_chroma(img, sigma)),
        )
    });

    r.register("tv_denoise_luma", |p, _| {
        let lambda: f32 = p.or("lambda", 0.1)?;
        let iterations: usize = p.or("iterations", 30)?;
        non_negative("lambda", lambda)?;
        ensure(iterations >= 1, || "`iterations` must be >= 1".into())?;
        image_stage(
            Accept::Convert {
                from: vec![ColorSpace::YCbCr],
                to: ColorSpace::YCbCr,
            },
            move |img, _| denoise::tv_denoise_luma(img, lambda, iterations),
        )
    });

    r.register("local_contrast_correction", |p, _| {
        let sigma: f32 = p.or("mask_sigma", 16.0)?;
        positive("mask_sigma", sigma)?;
        image_stage(Accept::Rgb, move |img, _| tone::local_contrast_correction(img, sigma))
    });

    r.register("mean_contrast_stretch", |p, _| {
        let beta: f32 = p.or("beta", ToneParams::default().beta)?;
        non_negative("beta", beta)?;
        image_stage(Accept::Rgb, move |img, _| tone::mean_contrast_stretch(img, beta))
    });

    r.register("s_curve", |p, _| {
        let d = ToneParams::default();
        let center: f32 = p.or("center", d.curve_center)?;
        let strength: f32 = p.or("strength", d.curve_strength)?;
        unit("center", center)?;
        positive("strength", strength)?;
        image_stage(Accept::Rgb, move |img, _| tone::s_curve(img, center, strength))
    });

    r.register("histogram_stretch", |p, _| {
        let d = ToneParams::default();
        let lo: f64 = p.or("p_lo", d.p_lo)?;
        let hi: f64 = p.or("p_hi", d.p_hi)?;
        ensure((0.0..100.0).contains(&lo) && lo < hi && hi <= 100.0, || {
            format!("need 0 <= p_lo < p_hi <= 100, got {lo} / {hi}")
        })?;
        image_stage(Accept::Rgb, move |img, _| tone::histogram_stretch(img, lo, hi))
    });

    r.register("autocontrast", |p, _| {
        let cutoff: f64 = p.or("cutoff", ToneParams::default().autocontrast_cutoff)?;
        ensure((0.0..50.0).contains(&cutoff), || format!("`cutoff` must be in [0, 50), got {cutoff}"))?;
        image_stage(Accept::Rgb, move |img, _| tone::autocontrast(img, cutoff))
    });

    r.register("conditional_contrast", |p, _| {
        let d = ToneParams::default();
        let dark: f32 = p.or("dark_thresh", 0.18)?;
        let bright: f32 = p.or("bright_thresh", 0.55)?;
        let params = ToneParams {
            dark_gamma: p.or("dark_gamma", d.dark_gamma)?,
            bright_curve_center: p.or("bright_curve_center", d.bright_curve_center)?,
            bright_curve_strength: p.or("bright_curve_strength", d.bright_curve_strength)?,
            ..d
        };
        unit("dark_thresh", dark)?;
        unit("bright_thresh", bright)?;
        ensure(dark < bright, || "`dark_thresh` must be below `bright_thresh`".into())?;
        ensure(params.dark_gamma > 0.0 && params.dark_gamma < 1.0, || {
            "`dark_gamma` must be in (0, 1)".into()
        })?;
        unit("bright_curve_center", params.bright_curve_center)?;
        positive("bright_curve_strength", params.bright_curve_strength)?;
        image_stage(Accept::Rgb, move |img, _| tone::conditional_contrast(img, dark, bright, &params))
    });

    r.register("naka_rushton", |p, _| {
        let alpha: f32 = p.or("alpha", ToneParams::default().alpha)?;
        positive("alpha", alpha)?;
        image_stage(Accept::Rgb, move |img, _| tone::naka_rushton(img, alpha))
    });

    r.register("nite_tonemap", |p, _| {
        let grid: (usize, usize) = p.or("grid", ToneParams::default().grid)?;
        let alpha_scale: f32 = p.or("alpha_scale", 1.0)?;
        ensure(grid.0 >= 1 && grid.1 >= 1, || "`grid` must be at least [1, 1]".into())?;
        positive("alpha_scale", alpha_scale)?;
        image_stage(Accept::Rgb, move |img, _| tone::nite_tonemap(img, grid, alpha_scale))
    });

    r.register("unsharp_mask", |p, _| {
        let d = ToneParams::default();
        let radius: f32 = p.or("radius", d.unsharp_radius)?;
        let amount: f32 = p.or("amount", d.unsharp_amount)?;
        let threshold: f32 = p.or("threshold", d.unsharp_threshold)?;
        positive("radius", radius)?;
        non_negative("amount", amount)?;
        unit("threshold", threshold)?;
        image_stage(Accept::Rgb, move |img, _| tone::unsharp_mask(img, radius, amount, threshold))
    });

    r.register("saturation_adjust", |p, _| {
        let factor: f32 = p.or("factor", 1.0)?;
        let window: Option<HueWindow> = p.get("hue_window")?;
        non_negative("factor", factor)?;
        image_stage(Accept::Rgb, move |img, _| tone::saturation_adjust(img, factor, window))
    });

    r.register("memory_color_enhance", |p, _| {
        let prototypes: Vec<MemoryColor> = p.or("prototypes", Vec::new())?;
        let probe = ImageF::filled(2, 2, [0.5; 3], ColorSpace::SrgbEncoded).expect("2x2 probe");
        tone::memory_color_enhance(&probe, &prototypes).map_err(|e| e.to_string())?;
        image_stage(Accept::Rgb, move |img, _| tone::memory_color_enhance(img, &prototypes))
    });

    r.register("piecewise_gamma", |p, _| {
        let knots: Vec<(f32, f32)> = p.required("knots")?;
        let probe = ImageF::filled(2, 2, [0.5; 3], ColorSpace::SrgbEncoded).expect("2x2 probe");
        tone::piecewise_gamma(&probe, &knots).map_err(|e| e.to_string())?;
        image_stage(Accept::Rgb, move |img, _| tone::piecewise_gamma(img, &knots))
    });
}
