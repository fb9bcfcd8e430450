//! Fixed 64-dimensional hand-crafted image embedding.
//!
//! Layout:
//! - `0..48`: the first 48 (row-major) of the 8x8 grid of luma cell means,
//!   each minus the mean of all 64 cells;
//! - `48..56`: gradient-magnitude histogram, percent of pixels per bin with
//!   edges `[0, 2, 4, 8, 16, 32, 64, 128, inf)`;
//! - `56..64`: statistics of per-block (8x8) luma standard deviation: mean,
//!   std, min, p25, p50, p75, max, percent of blocks with std above
//!   [`BUSY_BLOCK_STD`].

use crate::imaging::Image;
use crate::par_map;

pub const FEATURE_DIM: usize = 64;
pub const FEATURE_EXTRACTOR_VERSION: &str = "grid48-grad8-block8/1";

const GRID: usize = 8;
const GRID_KEPT: usize = 48;
const GRAD_EDGES: [f64; 8] = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
const BLOCK: usize = 8;
const BUSY_BLOCK_STD: f64 = 8.0;

pub fn feature_embed(image: &Image) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let luma = image.luma();
    let mut out = Vec::with_capacity(FEATURE_DIM);

    let mut cells = [0.0; GRID * GRID];
    for gy in 0..GRID {
        let (y0, y1) = (gy * h / GRID, (gy + 1) * h / GRID);
        for gx in 0..GRID {
            let (x0, x1) = (gx * w / GRID, (gx + 1) * w / GRID);
            let mut s = 0.0;
            for y in y0..y1 {
                s += luma[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            cells[gy * GRID + gx] = s / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    let cell_mean = cells.iter().sum::<f64>() / cells.len() as f64;
    out.extend(cells[..GRID_KEPT].iter().map(|c| c - cell_mean));

    let mut hist = [0usize; 8];
    for y in 0..h {
        for x in 0..w {
            let v = luma[y * w + x];
            let gx = if x + 1 < w {
                luma[y * w + x + 1] - v
            } else {
                0.0
            };
            let gy = if y + 1 < h {
                luma[(y + 1) * w + x] - v
            } else {
                0.0
            };
            let m = (gx * gx + gy * gy).sqrt();
            let bin = GRAD_EDGES.iter().rposition(|&e| m >= e).unwrap_or(0);
            hist[bin] += 1;
        }
    }
    let n = (w * h) as f64;
    out.extend(hist.iter().map(|&c| 100.0 * c as f64 / n));

    let mut stds = Vec::with_capacity((w / BLOCK) * (h / BLOCK));
    for by in 0..h / BLOCK {
        for bx in 0..w / BLOCK {
            let vals = (0..BLOCK).flat_map(|dy| {
                let row = (by * BLOCK + dy) * w + bx * BLOCK;
                luma[row..row + BLOCK].iter().copied()
            });
            stds.push(population_std(vals));
        }
    }
    stds.sort_by(f64::total_cmp);
    let pct = |p: f64| stds[(p * (stds.len() - 1) as f64).round() as usize];
    let busy = stds.iter().filter(|&&s| s > BUSY_BLOCK_STD).count();
    out.extend([
        stds.iter().sum::<f64>() / stds.len() as f64,
        population_std(stds.iter().copied()),
        stds[0],
        pct(0.25),
        pct(0.5),
        pct(0.75),
        stds[stds.len() - 1],
        100.0 * busy as f64 / stds.len() as f64,
    ]);
    debug_assert_eq!(out.len(), FEATURE_DIM);
    out
}

fn population_std(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = vals.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    (vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt()
}

/// Embeds every image; output order follows input order for any `jobs`.
pub fn embed_all(images: &[Image], jobs: usize) -> Vec<Vec<f64>> {
    par_map(images, jobs, |_, img| feature_embed(img))
}
