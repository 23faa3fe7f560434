use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rawio::{GainMap, RawFrame};

use super::{Pipeline, RunOptions, StageReport};

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions<'a> {
    pub repeats: usize,
    /// Lets distinct images run on separate threads. Timings taken this way
    /// compete for cores and are not comparable with serial runs.
    pub concurrent: bool,
    pub seed: u64,
    pub gain_map: Option<&'a GainMap>,
}

impl Default for BenchOptions<'_> {
    fn default() -> Self {
        BenchOptions {
            repeats: 3,
            concurrent: false,
            seed: 0,
            gain_map: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchImage {
    pub frame_id: String,
    /// Median of `runs`.
    pub seconds: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStage {
    pub index: usize,
    pub stage_id: String,
    /// Mean over images of the per-image median.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub pipeline: String,
    pub repeats: usize,
    pub images: Vec<BenchImage>,
    /// Mean over images of the per-image median; 0 with no images.
    pub seconds_per_image: f64,
    pub stages: Vec<BenchStage>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

struct ImageRuns {
    totals: Vec<f64>,
    reports: Vec<Vec<StageReport>>,
}

fn time_image(pipeline: &Pipeline, raw: &RawFrame, opts: &BenchOptions<'_>) -> Result<ImageRuns> {
    let run_opts = RunOptions {
        seed: opts.seed,
        gain_map: opts.gain_map,
    };
    let mut runs = ImageRuns {
        totals: Vec::with_capacity(opts.repeats),
        reports: Vec::with_capacity(opts.repeats),
    };
    for _ in 0..opts.repeats {
        let out = pipeline.run(raw, &run_opts)?;
        runs.totals.push(out.total_seconds);
        runs.reports.push(out.reports);
    }
    Ok(runs)
}

/// Times `pipeline` on every frame `repeats` times. Each image contributes
/// the median of its runs; the headline figure is the mean of those medians.
pub fn bench(raws: &[RawFrame], pipeline: &Pipeline, opts: &BenchOptions<'_>) -> Result<BenchSummary> {
    if opts.repeats == 0 {
        return Err(Error::Param("repeats must be >= 1".into()));
    }
    let results: Vec<Result<ImageRuns>> = if opts.concurrent && raws.len() > 1 {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(raws.len());
        let chunk = raws.len().div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = raws
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || part.iter().map(|r| time_image(pipeline, r, opts)).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("bench worker panicked"))
                .collect()
        })
    } else {
        raws.iter().map(|r| time_image(pipeline, r, opts)).collect()
    };

    let mut images = Vec::with_capacity(raws.len());
    // (index, stage_id) → per-image medians
    let mut per_stage: Vec<((usize, String), Vec<f64>)> = Vec::new();
    for (raw, res) in raws.iter().zip(results) {
        let runs = res?;
        images.push(BenchImage {
            frame_id: raw.meta.frame_id.clone(),
            seconds: median(&runs.totals),
            runs: runs.totals.clone(),
        });
        let n_stages = runs.reports[0].len();
        for i in 0..n_stages {
            let id = runs.reports[0][i].stage_id.clone();
            let times: Vec<f64> = runs.reports.iter().map(|r| r[i].wall_time).collect();
            let key = (i, id);
            match per_stage.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(median(&times)),
                None => per_stage.push((key, vec![median(&times)])),
            }
        }
    }
    per_stage.sort_by(|a, b| a.0.cmp(&b.0));
    let stages = per_stage
        .into_iter()
        .map(|((index, stage_id), v)| BenchStage {
            index,
            stage_id,
            seconds: v.iter().sum::<f64>() / v.len() as f64,
        })
        .collect();
    let seconds_per_image = if images.is_empty() {
        0.0
    } else {
        images.iter().map(|i| i.seconds).sum::<f64>() / images.len() as f64
    };
    Ok(BenchSummary {
        pipeline: pipeline.name().to_string(),
        repeats: opts.repeats,
        images,
        seconds_per_image,
        stages,
    })
}

impl BenchSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    /// Aligned plain-text table: per-stage breakdown, per-image medians and
    /// the headline mean.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        for s in &self.stages {
            rows.push((format!("{:>2}  {}", s.index, s.stage_id), format!("{:.6}", s.seconds)));
        }
        let stage_rows = rows.len();
        for img in &self.images {
            rows.push((format!("image {}", img.frame_id), format!("{:.6}", img.seconds)));
        }
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(16);
        let mut out = String::new();
        let _ = writeln!(out, "pipeline {}  (repeats {})", self.pipeline, self.repeats);
        let _ = writeln!(out, "{:<width$}  {:>12}", "stage", "seconds");
        for (i, (label, secs)) in rows.iter().enumerate() {
            if i == stage_rows {
                let _ = writeln!(out, "{}", "-".repeat(width + 14));
            }
            let _ = writeln!(out, "{label:<width$}  {secs:>12}");
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 14));
        let _ = writeln!(out, "{:<width$}  {:>12.6}", "mean per image", self.seconds_per_image);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }
}
