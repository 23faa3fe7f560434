//! Small numeric building blocks shared across operators: mirror indexing,
//! separable Gaussian blur, luma and percentiles.

/// BT.601 luma weights.
pub const LUMA_R: f32 = 0.299;
pub const LUMA_G: f32 = 0.587;
pub const LUMA_B: f32 = 0.114;

#[inline]
pub fn luma(px: [f32; 3]) -> f32 {
    LUMA_R * px[0] + LUMA_G * px[1] + LUMA_B * px[2]
}

/// Mirror-reflects `i` into `0..n` without repeating the edge sample
/// (`-1 -> 1`, `n -> n - 2`). Keeps Bayer parity intact.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Normalised 1-D Gaussian kernel with radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let denom = 2.0 * (sigma as f64) * (sigma as f64);
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| (t / sum) as f32).collect()
}

/// Separable Gaussian blur of one plane with mirror boundaries.
/// `sigma <= 0` returns an unchanged copy.
pub fn gaussian_blur(src: &[f32], width: usize, height: usize, sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return src.to_vec();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;

    let mut tmp = vec![0.0f32; src.len()];
    let mut line = vec![0.0f32; width + 2 * radius as usize];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for (i, slot) in line.iter_mut().enumerate() {
            *slot = row[reflect(i as isize - radius, width)];
        }
        let out = &mut tmp[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0f32;
            for (k, &w) in kernel.iter().enumerate() {
                acc += w * line[x + k];
            }
            *o = acc;
        }
    }

    let mut dst = vec![0.0f32; src.len()];
    let rows: Vec<usize> = (0..height + 2 * radius as usize)
        .map(|i| reflect(i as isize - radius, height))
        .collect();
    for y in 0..height {
        let out = &mut dst[y * width..(y + 1) * width];
        for (k, &w) in kernel.iter().enumerate() {
            let sy = rows[y + k];
            let row = &tmp[sy * width..(sy + 1) * width];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
    }
    dst
}

/// Percentile with linear interpolation between order statistics
/// (rank `p/100 · (n-1)`). `sorted` must be ascending and non-empty.
pub fn percentile_sorted(sorted: &[f32], p: f64) -> f32 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = (p.clamp(0.0, 100.0) / 100.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let t = rank - lo as f64;
    let a = sorted[lo] as f64;
    let b = sorted[hi] as f64;
    (a + t * (b - a)) as f32
}

pub fn sorted_copy(samples: &[f32]) -> Vec<f32> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(f32::total_cmp);
    v
}

/// `10·log10(1 / MSE)` for signals in `[0, 1]`.
pub fn psnr(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mse = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}
