use nightisp::mosaic::normalize_levels;
use nightisp::planar::MosaicF;
use nightisp::rawio::{self, build_gain_map_from_mosaic};

use crate::inputs::{expand, parse_size};
use crate::{CalibrateArgs, CmdResult, Failure};

pub fn calibrate(args: CalibrateArgs) -> CmdResult {
    let (gw, gh) = parse_size(&args.grid)?;
    let inputs = expand(&args.inputs)?;
    let mut sum: Option<(MosaicF, Vec<f64>)> = None;
    for p in &inputs {
        let raw = rawio::load_raw(p, rawio::sidecar_path(p))
            .map_err(|e| Failure::Failed(format!("{}: {e}", p.display())))?;
        let m = normalize_levels(&raw);
        match &mut sum {
            None => {
                let acc = m.data().iter().map(|&v| v as f64).collect();
                sum = Some((m, acc));
            }
            Some((first, acc)) => {
                if (m.width(), m.height()) != (first.width(), first.height()) || m.cfa() != first.cfa() {
                    return Err(Failure::Failed(format!(
                        "dimension error: {} is {}x{} {}, expected {}x{} {}",
                        p.display(),
                        m.width(),
                        m.height(),
                        m.cfa(),
                        first.width(),
                        first.height(),
                        first.cfa()
                    )));
                }
                for (a, &v) in acc.iter_mut().zip(m.data()) {
                    *a += v as f64;
                }
            }
        }
    }
    let (first, acc) = sum.expect("at least one input");
    let n = inputs.len() as f64;
    let mean: Vec<f32> = acc.into_iter().map(|a| (a / n) as f32).collect();
    let mean = MosaicF::new(first.width(), first.height(), mean, first.cfa())
        .map_err(|e| Failure::Failed(e.to_string()))?;
    let map = build_gain_map_from_mosaic(&mean, args.sigma, args.cap)
        .map_err(|e| match e {
            nightisp::Error::Param(m) => Failure::Usage(m),
            other => Failure::Failed(other.to_string()),
        })?
        .coarsen(gw, gh);
    map.save(&args.out).map_err(|e| Failure::Failed(e.to_string()))?;
    println!(
        "{} frame(s) -> {} ({}x{} grid per site, cap {})",
        inputs.len(),
        args.out.display(),
        map.grid_width,
        map.grid_height,
        map.gain_cap
    );
    Ok(())
}
