use super::linalg::{jacobi_eigen, SymMatrix};
use super::MetricError;
use crate::Scalar;

/// Ridge added to the covariance when there are fewer samples than `D + 1`.
pub const SHRINKAGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGaussian<F> {
    mean: Vec<F>,
    cov: SymMatrix<F>,
}

impl<F: Scalar> FeatureGaussian<F> {
    /// Checks shape, finiteness, symmetry, and that the smallest eigenvalue
    /// is at least `-1e-9` (scaled by the matrix norm).
    pub fn new(mean: Vec<F>, cov: SymMatrix<F>) -> Result<Self, MetricError> {
        if cov.dim() != mean.len() {
            return Err(MetricError::DimensionMismatch {
                expected: mean.len(),
                actual: cov.dim(),
            });
        }
        if !cov.is_finite() || mean.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        let n = cov.dim();
        let scale = cov.frobenius().max(F::one());
        let sym_tol = F::lit(1e-12).max(F::epsilon() * F::lit(4.0)) * scale;
        for i in 0..n {
            for j in i + 1..n {
                if (cov.get(i, j) - cov.get(j, i)).abs() > sym_tol {
                    return Err(MetricError::NotPsd(format!(
                        "entry ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        let min_eig = jacobi_eigen(&cov, false)?
            .values
            .into_iter()
            .fold(F::infinity(), F::min);
        let psd_tol = F::lit(1e-9).max(F::epsilon() * F::lit(n as f64)) * scale;
        if n > 0 && min_eig < -psd_tol {
            return Err(MetricError::NotPsd(format!(
                "smallest eigenvalue {min_eig}"
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[F] {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix<F> {
        &self.cov
    }
}

/// Sample mean and `N - 1` covariance, symmetrized. With fewer than `D + 1`
/// vectors the covariance gets `SHRINKAGE * I` added.
pub fn gaussian_fit<F: Scalar>(features: &[Vec<F>]) -> Result<FeatureGaussian<F>, MetricError> {
    if features.len() < 2 {
        return Err(MetricError::TooFewSamples {
            needed: 2,
            actual: features.len(),
        });
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(MetricError::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let n = F::lit(features.len() as f64);
    let mut mean = vec![F::zero(); d];
    for f in features {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m / n;
    }
    let mut cov = SymMatrix::zeros(d);
    for f in features {
        for i in 0..d {
            let di = f[i] - mean[i];
            for j in i..d {
                cov.set(i, j, cov.get(i, j) + di * (f[j] - mean[j]));
            }
        }
    }
    let denom = n - F::one();
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    cov.symmetrize();
    if features.len() < d + 1 {
        cov.add_diagonal(F::lit(SHRINKAGE));
    }
    FeatureGaussian::new(mean, cov)
}
