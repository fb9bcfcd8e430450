use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Image, ImageError, MIN_DIMENSION};
use crate::derive_seed;

/// Deterministic RGB test images: a linear colour gradient, a sinusoidal
/// grating, a few hard-edged shapes, and light sensor noise.
pub fn generate_dataset(
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<Image>, ImageError> {
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(ImageError::InvalidDimensions {
            width,
            height,
            channels: 3,
        });
    }
    if count == 0 {
        return Err(ImageError::InvalidArgument(
            "dataset count must be >= 1".into(),
        ));
    }
    (0..count)
        .map(|i| synth_image(width, height, derive_seed(seed, i as u64)))
        .collect()
}

enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, r: f64 },
    Stripe { nx: f64, ny: f64, lo: f64, hi: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Stripe { nx, ny, lo, hi } => {
                let t = x * nx + y * ny;
                t >= lo && t < hi
            }
        }
    }
}

fn synth_image(w: usize, h: usize, seed: u64) -> Result<Image, ImageError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (w as f64, h as f64);
    let diag = wf.hypot(hf);

    let colour = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        [
            rng.random_range(30.0..225.0),
            rng.random_range(30.0..225.0),
            rng.random_range(30.0..225.0),
        ]
    };
    let c0 = colour(&mut rng);
    let c1 = colour(&mut rng);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (gx, gy) = (theta.cos(), theta.sin());

    let amp: f64 = rng.random_range(8.0..40.0);
    let freq: f64 = rng.random_range(0.04..0.35);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (fx, fy) = (freq * phi.cos(), freq * phi.sin());
    let tint = [
        rng.random_range(0.5..1.0),
        rng.random_range(0.5..1.0),
        rng.random_range(0.5..1.0),
    ];

    let n_shapes = rng.random_range(2..=5);
    let mut shapes = Vec::with_capacity(n_shapes);
    for _ in 0..n_shapes {
        let shape = match rng.random_range(0..3) {
            0 => {
                let x0 = rng.random_range(0.0..wf * 0.8);
                let y0 = rng.random_range(0.0..hf * 0.8);
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.random_range(wf * 0.1..wf * 0.5),
                    y1: y0 + rng.random_range(hf * 0.1..hf * 0.5),
                }
            }
            1 => Shape::Disc {
                cx: rng.random_range(0.0..wf),
                cy: rng.random_range(0.0..hf),
                r: rng.random_range(diag * 0.05..diag * 0.25),
            },
            _ => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let lo = rng.random_range(-diag * 0.5..diag * 0.5);
                Shape::Stripe {
                    nx: a.cos(),
                    ny: a.sin(),
                    lo,
                    hi: lo + rng.random_range(2.0..diag * 0.2),
                }
            }
        };
        shapes.push((shape, colour(&mut rng)));
    }

    let mut samples = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = (((xf - wf / 2.0) * gx + (yf - hf / 2.0) * gy) / diag + 0.5).clamp(0.0, 1.0);
            let wave = amp * (std::f64::consts::TAU * (fx * xf + fy * yf) + phase).sin();
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = c0[c] * (1.0 - t) + c1[c] * t + wave * tint[c];
            }
            // later shapes are drawn on top
            for (shape, col) in &shapes {
                if shape.contains(xf, yf) {
                    px = [
                        col[0] + 0.3 * wave,
                        col[1] + 0.3 * wave,
                        col[2] + 0.3 * wave,
                    ];
                }
            }
            for v in px {
                let noise: f64 = rng.random_range(-3.0..=3.0);
                samples.push((v + noise).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(w, h, 3, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            generate_dataset(2, 64, 64, 7).unwrap(),
            generate_dataset(2, 64, 64, 7).unwrap()
        );
        assert_ne!(
            generate_dataset(1, 64, 64, 7).unwrap(),
            generate_dataset(1, 64, 64, 8).unwrap()
        );
    }

    #[test]
    fn rejects_small_or_empty() {
        assert!(generate_dataset(1, 4, 64, 1).is_err());
        assert!(generate_dataset(0, 64, 64, 1).is_err());
    }

    #[test]
    fn no_constant_images() {
        for img in generate_dataset(256, 64, 64, 2024).unwrap() {
            let s = img.samples();
            let mean = s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / s.len() as f64;
            assert!(var > 0.0);
        }
    }
}
