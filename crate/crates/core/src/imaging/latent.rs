//! Emulated latent codec and stochastic generative decoder.
//!
//! A latent is a box-downsampled, coarsely quantized Y/Cb/Cr grid (chroma
//! at half the luma resolution), DPCM-coded with the luma DC prefix table.
//! Generation rebuilds a smooth base image from the grid and adds seeded,
//! high-pass shaped detail, so one prompt yields different images for
//! different seeds around an identical base.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bits::{category, get_magnitude, put_magnitude, BitReader, BitWriter};
use super::jpeg::{tables, to_planes};
use super::prompt::{CodecId, EncodedPrompt};
use super::{Image, ImageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatentTier {
    Low,
    Med,
    High,
}

/// Standard deviation of unit white noise after the `1 - binomial3x3`
/// high-pass: sqrt((1 - 4/16)^2 + 4 (2/16)^2 + 4 (1/16)^2).
const HIGH_PASS_GAIN: f64 = 0.800_390_529_679_107;

impl LatentTier {
    pub const ALL: [LatentTier; 3] = [LatentTier::Low, LatentTier::Med, LatentTier::High];

    pub fn as_str(self) -> &'static str {
        match self {
            LatentTier::Low => "low",
            LatentTier::Med => "med",
            LatentTier::High => "high",
        }
    }

    pub fn codec(self) -> CodecId {
        match self {
            LatentTier::Low => CodecId::LatentLow,
            LatentTier::Med => CodecId::LatentMed,
            LatentTier::High => CodecId::LatentHigh,
        }
    }

    pub fn from_codec(codec: CodecId) -> Option<Self> {
        match codec {
            CodecId::LatentLow => Some(LatentTier::Low),
            CodecId::LatentMed => Some(LatentTier::Med),
            CodecId::LatentHigh => Some(LatentTier::High),
            CodecId::JpegLike => None,
        }
    }

    /// Luma downsample factor; chroma uses twice this.
    pub fn factor(self) -> usize {
        match self {
            LatentTier::Low => 8,
            LatentTier::Med => 4,
            LatentTier::High => 2,
        }
    }

    fn steps(self) -> (f64, f64) {
        match self {
            LatentTier::Low => (12.0, 16.0),
            LatentTier::Med => (8.0, 12.0),
            LatentTier::High => (6.0, 8.0),
        }
    }

    /// Standard deviation of synthesized detail, in luma units.
    fn detail_amplitude(self) -> f64 {
        match self {
            LatentTier::Low => 6.0,
            LatentTier::Med => 4.0,
            LatentTier::High => 2.0,
        }
    }

    fn plane_factor(self, plane: usize) -> usize {
        if plane == 0 {
            self.factor()
        } else {
            2 * self.factor()
        }
    }

    fn plane_step(self, plane: usize) -> f64 {
        let (luma, chroma) = self.steps();
        if plane == 0 {
            luma
        } else {
            chroma
        }
    }
}

fn downsample(plane: &[f64], w: usize, h: usize, f: usize) -> (Vec<f64>, usize, usize) {
    let (gw, gh) = (w.div_ceil(f), h.div_ceil(f));
    let mut grid = Vec::with_capacity(gw * gh);
    for gy in 0..gh {
        for gx in 0..gw {
            let (y0, y1) = (gy * f, ((gy + 1) * f).min(h));
            let (x0, x1) = (gx * f, ((gx + 1) * f).min(w));
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += plane[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            grid.push(sum / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    (grid, gw, gh)
}

fn predictor(q: &[i32], gw: usize, i: usize) -> i32 {
    if !i.is_multiple_of(gw) {
        q[i - 1]
    } else if i >= gw {
        q[i - gw]
    } else {
        0
    }
}

pub fn latent_encode(image: &Image, tier: LatentTier) -> EncodedPrompt {
    let (w, h) = (image.width(), image.height());
    let code = &tables().luma_dc;
    let mut out = BitWriter::new();
    for (pi, plane) in to_planes(image).iter().enumerate() {
        let (grid, gw, _) = downsample(plane, w, h, tier.plane_factor(pi));
        let step = tier.plane_step(pi);
        let q: Vec<i32> = grid
            .iter()
            .map(|v| ((v - 128.0) / step).round() as i32)
            .collect();
        for i in 0..q.len() {
            let diff = q[i] - predictor(&q, gw, i);
            let cat = category(diff);
            code.put(&mut out, cat as u8);
            put_magnitude(&mut out, diff, cat);
        }
    }
    EncodedPrompt::new(tier.codec(), out.finish(), 0, w, h, image.channels())
        .expect("image geometry is already validated")
}

fn decode_grids(
    prompt: &EncodedPrompt,
    tier: LatentTier,
) -> Result<Vec<(Vec<f64>, usize, usize)>, ImageError> {
    let (w, h) = (prompt.width(), prompt.height());
    let code = &tables().luma_dc;
    let mut r = BitReader::new(prompt.payload());
    let mut grids = Vec::with_capacity(prompt.channels());
    for pi in 0..prompt.channels() {
        let f = tier.plane_factor(pi);
        let (gw, gh) = (w.div_ceil(f), h.div_ceil(f));
        let step = tier.plane_step(pi);
        let mut q = vec![0i32; gw * gh];
        for i in 0..q.len() {
            let cat = code.get(&mut r)? as u32;
            if cat > 11 {
                return Err(r.corrupt(format!("residual category {cat}")));
            }
            q[i] = predictor(&q, gw, i) + get_magnitude(&mut r, cat)?;
        }
        grids.push((q.iter().map(|&v| v as f64 * step + 128.0).collect(), gw, gh));
    }
    r.expect_end()?;
    Ok(grids)
}

/// Bilinear upsampling of a grid whose cells are `f` pixels wide.
fn upsample(grid: &[f64], gw: usize, gh: usize, f: usize, w: usize, h: usize) -> Vec<f64> {
    let coord = |p: usize, n: usize| {
        let g = ((p as f64 + 0.5) / f as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = g.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, g - i0 as f64)
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, ty) = coord(y, gh);
        for x in 0..w {
            let (x0, x1, tx) = coord(x, gw);
            let top = grid[y0 * gw + x0] * (1.0 - tx) + grid[y0 * gw + x1] * tx;
            let bottom = grid[y1 * gw + x0] * (1.0 - tx) + grid[y1 * gw + x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// 3x3 binomial blur with clamped borders.
fn blur(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    const K: [f64; 3] = [0.25, 0.5, 0.25];
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..3)
                .map(|k| K[k] * plane[y * w + (x + k).saturating_sub(1).min(w - 1)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..3)
                .map(|k| K[k] * tmp[(y + k).saturating_sub(1).min(h - 1) * w + x])
                .sum();
        }
    }
    out
}

/// Reconstructs an image from a latent prompt. The smooth base depends only
/// on the prompt; `seed` drives the synthesized detail.
pub fn generative_decode(prompt: &EncodedPrompt, seed: u64) -> Result<Image, ImageError> {
    let tier = LatentTier::from_codec(prompt.codec()).ok_or(ImageError::WrongCodec {
        expected: "latent",
        found: prompt.codec(),
    })?;
    let (w, h) = (prompt.width(), prompt.height());
    let planes: Vec<Vec<f64>> = decode_grids(prompt, tier)?
        .into_iter()
        .enumerate()
        .map(|(pi, (grid, gw, gh))| {
            blur(&upsample(&grid, gw, gh, tier.plane_factor(pi), w, h), w, h)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..w * h)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let smooth = blur(&noise, w, h);
    let gain = tier.detail_amplitude() / HIGH_PASS_GAIN;
    let detail: Vec<f64> = noise
        .iter()
        .zip(&smooth)
        .map(|(n, s)| gain * (n - s))
        .collect();

    let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let samples = if planes.len() == 1 {
        planes[0]
            .iter()
            .zip(&detail)
            .map(|(&y, &d)| q(y + d))
            .collect()
    } else {
        let mut s = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            let (y, cb, cr) = (
                planes[0][i] + detail[i],
                planes[1][i] - 128.0,
                planes[2][i] - 128.0,
            );
            s.push(q(y + 1.402 * cr));
            s.push(q(y - 0.344136 * cb - 0.714136 * cr));
            s.push(q(y + 1.772 * cb));
        }
        s
    };
    Image::new(w, h, prompt.channels(), samples)
}
