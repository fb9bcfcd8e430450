use super::features::embed_all;
use super::gaussian::{gaussian_fit, FeatureGaussian};
use super::linalg::{singular_values, sqrt_psd, SymMatrix};
use super::MetricError;
use crate::imaging::Image;
use crate::Scalar;

/// A fixed Gaussian with its matrix square root cached, for measuring many
/// candidates against the same reference set.
#[derive(Debug, Clone)]
pub struct FrechetReference<F> {
    gaussian: FeatureGaussian<F>,
    sqrt_cov: SymMatrix<F>,
}

impl<F: Scalar> FrechetReference<F> {
    pub fn new(gaussian: FeatureGaussian<F>) -> Result<Self, MetricError> {
        let sqrt_cov = sqrt_psd(gaussian.cov())?;
        Ok(Self { gaussian, sqrt_cov })
    }

    pub fn gaussian(&self) -> &FeatureGaussian<F> {
        &self.gaussian
    }

    /// `|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)`, clamped at 0.
    ///
    /// The cross term is evaluated as the sum of singular values of
    /// `S1^1/2 S2^1/2`, which equals it exactly but avoids taking square
    /// roots of the rounding noise in the near-null eigenvalues of the
    /// product (feature covariances are typically singular).
    pub fn distance(&self, other: &FeatureGaussian<F>) -> Result<F, MetricError> {
        let g = &self.gaussian;
        if other.dim() != g.dim() {
            return Err(MetricError::DimensionMismatch {
                expected: g.dim(),
                actual: other.dim(),
            });
        }
        let mean_term: F = g
            .mean()
            .iter()
            .zip(other.mean())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        let other_sqrt = sqrt_psd(other.cov())?;
        let n = g.dim();
        let cols: Vec<Vec<F>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|k| self.sqrt_cov.get(i, k) * other_sqrt.get(k, j))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let cross: F = singular_values(cols)?.into_iter().sum();
        let trace_term =
            (g.cov().trace() + other.cov().trace() - F::lit(2.0) * cross).max(F::zero());
        Ok((mean_term + trace_term).max(F::zero()))
    }
}

pub fn frechet_distance<F: Scalar>(
    g1: &FeatureGaussian<F>,
    g2: &FeatureGaussian<F>,
) -> Result<F, MetricError> {
    if g1.dim() != g2.dim() {
        return Err(MetricError::DimensionMismatch {
            expected: g1.dim(),
            actual: g2.dim(),
        });
    }
    FrechetReference::new(g1.clone())?.distance(g2)
}

/// Fréchet distance between the feature Gaussians of two image sets.
pub fn fid(real: &[Image], generated: &[Image]) -> Result<f64, MetricError> {
    for set in [real, generated] {
        if set.is_empty() {
            return Err(MetricError::TooFewSamples {
                needed: 1,
                actual: 0,
            });
        }
    }
    let a = gaussian_fit(&embed_all(real, 1))?;
    let b = gaussian_fit(&embed_all(generated, 1))?;
    frechet_distance(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{generate_dataset, generative_decode, latent_encode, LatentTier};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss(mean: Vec<f64>, cov: Vec<f64>) -> FeatureGaussian<f64> {
        let n = mean.len();
        FeatureGaussian::new(mean, SymMatrix::from_row_major(n, cov).unwrap()).unwrap()
    }

    fn random_gaussian(d: usize, seed: u64) -> FeatureGaussian<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<f64>> = (0..3 * d)
            .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        gaussian_fit(&data).unwrap()
    }

    #[test]
    fn scalar_closed_form() {
        let (m1, v1, m2, v2) = (0.3, 2.5, -1.1, 0.4);
        let d = frechet_distance(&gauss(vec![m1], vec![v1]), &gauss(vec![m2], vec![v2])).unwrap();
        let expect = (m1 - m2) * (m1 - m2) + (f64::sqrt(v1) - f64::sqrt(v2)).powi(2);
        assert!((d - expect).abs() < 1e-9);
    }

    #[test]
    fn diagonal_closed_form() {
        let v1: [f64; 4] = [1.0, 4.0, 0.25, 9.0];
        let v2: [f64; 4] = [2.0, 1.0, 0.25, 0.0];
        let mu1: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0];
        let mu2 = vec![1.0, 1.0, 0.0, 3.5];
        let d = frechet_distance(
            &FeatureGaussian::new(mu1.clone(), SymMatrix::from_diagonal(&v1)).unwrap(),
            &FeatureGaussian::new(mu2.clone(), SymMatrix::from_diagonal(&v2)).unwrap(),
        )
        .unwrap();
        let expect: f64 = (0..4)
            .map(|k| (mu1[k] - mu2[k]).powi(2) + (v1[k].sqrt() - v2[k].sqrt()).powi(2))
            .sum();
        assert!((d - expect).abs() < 1e-9);
    }

    #[test]
    fn identical_is_zero_and_symmetric_at_d64() {
        let a = random_gaussian(64, 1);
        let b = random_gaussian(64, 2);
        assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-9);
        let ab = frechet_distance(&a, &b).unwrap();
        let ba = frechet_distance(&b, &a).unwrap();
        assert!(ab > 0.0);
        assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
    }

    #[test]
    fn dimension_mismatch() {
        let a = gauss(vec![0.0], vec![1.0]);
        let b = gauss(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            frechet_distance(&a, &b),
            Err(MetricError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn works_in_f32() {
        let a = FeatureGaussian::new(vec![0.0f32], SymMatrix::from_diagonal(&[4.0])).unwrap();
        let b = FeatureGaussian::new(vec![1.0f32], SymMatrix::from_diagonal(&[1.0])).unwrap();
        assert!((frechet_distance(&a, &b).unwrap() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn fid_on_images() {
        let real = generate_dataset(80, 32, 32, 5).unwrap();
        assert!(fid(&real, &real).unwrap().abs() < 1e-6);
        let mut perturbed = real.clone();
        perturbed[0] = perturbed[0].invert();
        let d = fid(&real, &perturbed).unwrap();
        assert!(d > 0.0);
        let r = fid(&perturbed, &real).unwrap();
        assert!((d - r).abs() < 1e-9, "{d} vs {r}");
        assert!(fid(&real, &[]).is_err());
    }

    #[test]
    fn halves_closer_than_low_tier() {
        let real = generate_dataset(160, 32, 32, 21).unwrap();
        let (a, b) = real.split_at(80);
        let low: Vec<Image> = real
            .iter()
            .enumerate()
            .map(|(i, img)| {
                generative_decode(&latent_encode(img, LatentTier::Low), i as u64).unwrap()
            })
            .collect();
        let halves = fid(a, b).unwrap();
        let tier = fid(&real, &low).unwrap();
        assert!(halves < tier, "halves {halves} vs low tier {tier}");
    }
}
