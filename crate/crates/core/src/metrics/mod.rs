//! Distortion (normalized MSE) and perceptual quality (Fréchet distance
//! between Gaussians fitted to image features).

mod features;
mod frechet;
mod gaussian;
pub mod linalg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{Image, ImageError};
use crate::Scalar;

pub use features::{embed_all, feature_embed, FEATURE_DIM, FEATURE_EXTRACTOR_VERSION};
pub use frechet::{fid, frechet_distance, FrechetReference};
pub use gaussian::{gaussian_fit, FeatureGaussian, SHRINKAGE};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("non-finite matrix or vector entry")]
    NonFinite,
    #[error("covariance is not symmetric positive semi-definite: {0}")]
    NotPsd(String),
    #[error("fid_max must be > 0, got {0}")]
    NonPositiveMax(f64),
    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Distortion,
    Perception,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Distortion => "distortion",
            MetricKind::Perception => "perception",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distortion" => Ok(MetricKind::Distortion),
            "perception" => Ok(MetricKind::Perception),
            _ => Err(format!("unknown metric {s:?}")),
        }
    }
}

/// A raw measurement with its `[0, 1]` normalization (0 is perfect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub kind: MetricKind,
    pub raw: f64,
    pub normalized: f64,
}

impl QualityScore {
    pub fn new(kind: MetricKind, raw: f64, normalized: f64) -> Result<Self, MetricError> {
        if !raw.is_finite() || !(0.0..=1.0).contains(&normalized) {
            return Err(MetricError::NonFinite);
        }
        Ok(Self {
            kind,
            raw,
            normalized,
        })
    }

    pub fn distortion(original: &Image, candidate: &Image) -> Result<Self, MetricError> {
        let raw = mse(original, candidate)?;
        Self::new(
            MetricKind::Distortion,
            raw,
            normalized_mse(original, candidate)?,
        )
    }

    pub fn perception(fid_value: f64, fid_max: f64) -> Result<Self, MetricError> {
        Self::new(
            MetricKind::Perception,
            fid_value,
            normalize_fid(fid_value, fid_max)?,
        )
    }
}

fn squared_error_sum(a: &Image, b: &Image) -> Result<u64, MetricError> {
    a.same_dims(b)?;
    Ok(a.samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum())
}

/// Mean squared sample difference in 8-bit units.
pub fn mse(a: &Image, b: &Image) -> Result<f64, MetricError> {
    Ok(squared_error_sum(a, b)? as f64 / a.samples().len() as f64)
}

/// `mse(original, candidate) / mse(original, invert(original))`, in `[0, 1]`.
///
/// The denominator is never zero: `|s - (255 - s)|` is odd for every byte.
pub fn normalized_mse(original: &Image, candidate: &Image) -> Result<f64, MetricError> {
    let num = squared_error_sum(original, candidate)?;
    let den = squared_error_sum(original, &original.invert())?;
    Ok((num as f64 / den as f64).clamp(0.0, 1.0))
}

/// `min(value / fid_max, 1)`.
pub fn normalize_fid<F: Scalar>(value: F, fid_max: F) -> Result<F, MetricError> {
    if !(fid_max > F::zero()) || !fid_max.is_finite() {
        return Err(MetricError::NonPositiveMax(fid_max.to_f64_lossy()));
    }
    if !value.is_finite() {
        return Err(MetricError::NonFinite);
    }
    Ok((value.max(F::zero()) / fid_max).min(F::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::generate_dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, c, |_, _, _| rng.random()).unwrap()
    }

    #[test]
    fn mse_examples() {
        let x = random_image(13, 9, 3, 1);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let zero = Image::filled(8, 8, 1, 0).unwrap();
        let full = Image::filled(8, 8, 1, 255).unwrap();
        assert_eq!(mse(&zero, &full).unwrap(), 65025.0);
        assert!(matches!(mse(&zero, &x), Err(MetricError::Image(_))));
    }

    #[test]
    fn mse_matches_naive_loop() {
        for seed in 0..5 {
            let a = random_image(17, 11, 3, seed);
            let b = random_image(17, 11, 3, seed + 100);
            let mut s = 0.0;
            for y in 0..11 {
                for x in 0..17 {
                    for c in 0..3 {
                        let d = a.get(x, y, c) as f64 - b.get(x, y, c) as f64;
                        s += d * d;
                    }
                }
            }
            assert!((mse(&a, &b).unwrap() - s / (17.0 * 11.0 * 3.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_mse_endpoints_and_half_mix() {
        let x = random_image(16, 16, 3, 7);
        let inv = x.invert();
        assert_eq!(normalized_mse(&x, &x).unwrap(), 0.0);
        assert_eq!(normalized_mse(&x, &inv).unwrap(), 1.0);
        // checkerboard of pixels taken from the inverse: half of the per-pixel maxima
        let mix = Image::from_fn(16, 16, 3, |px, py, c| {
            if (px + py) % 2 == 0 {
                x.get(px, py, c)
            } else {
                inv.get(px, py, c)
            }
        })
        .unwrap();
        let num: f64 = (0..16)
            .flat_map(|py| (0..16).map(move |px| (px, py)))
            .filter(|(px, py)| (px + py) % 2 == 1)
            .flat_map(|(px, py)| (0..3).map(move |c| (px, py, c)))
            .map(|(px, py, c)| (2.0 * x.get(px, py, c) as f64 - 255.0).powi(2))
            .sum();
        let den: f64 = x
            .samples()
            .iter()
            .map(|&s| (2.0 * s as f64 - 255.0).powi(2))
            .sum();
        assert!((normalized_mse(&x, &mix).unwrap() - num / den).abs() < 1e-12);

        // constant image: every pixel contributes the same maximum, so the mix is exactly 0.5
        let g = Image::filled(8, 8, 1, 40).unwrap();
        let gi = g.invert();
        let gm = Image::from_fn(8, 8, 1, |px, _, _| if px % 2 == 0 { 40 } else { 215 }).unwrap();
        assert_eq!(normalized_mse(&g, &gm).unwrap(), 0.5);
        assert_eq!(normalized_mse(&g, &gi).unwrap(), 1.0);
    }

    #[test]
    fn mid_grey_has_nonzero_denominator() {
        for v in [127u8, 128] {
            let g = Image::filled(8, 8, 1, v).unwrap();
            assert_eq!(normalized_mse(&g, &g.invert()).unwrap(), 1.0);
        }
    }

    #[test]
    fn fid_normalization() {
        assert_eq!(normalize_fid(0.0, 40.0).unwrap(), 0.0);
        assert_eq!(normalize_fid(40.0, 40.0).unwrap(), 1.0);
        assert_eq!(normalize_fid(80.0, 40.0).unwrap(), 1.0);
        assert_eq!(normalize_fid(10.0f32, 40.0).unwrap(), 0.25);
        assert!(matches!(
            normalize_fid(1.0, 0.0),
            Err(MetricError::NonPositiveMax(_))
        ));
        assert!(normalize_fid(1.0, -3.0).is_err());
    }

    #[test]
    fn quality_scores() {
        let imgs = generate_dataset(2, 16, 16, 3).unwrap();
        let d = QualityScore::distortion(&imgs[0], &imgs[1]).unwrap();
        assert_eq!(d.kind, MetricKind::Distortion);
        assert!(d.normalized > 0.0 && d.normalized < 1.0);
        let p = QualityScore::perception(30.0, 20.0).unwrap();
        assert_eq!(p.normalized, 1.0);
        assert_eq!(
            "perception".parse::<MetricKind>().unwrap(),
            MetricKind::Perception
        );
    }

    proptest::proptest! {
        #[test]
        fn normalized_mse_bounds(seed in 0u64..1000, w in 8usize..20, h in 8usize..20, colour in proptest::bool::ANY) {
            let c = if colour { 3 } else { 1 };
            let x = random_image(w, h, c, seed);
            let y = random_image(w, h, c, seed ^ 0xabc);
            proptest::prop_assert_eq!(normalized_mse(&x, &x).unwrap(), 0.0);
            proptest::prop_assert_eq!(normalized_mse(&x, &x.invert()).unwrap(), 1.0);
            let v = normalized_mse(&x, &y).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
