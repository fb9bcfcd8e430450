//! Dense symmetric matrices and the cyclic Jacobi eigensolver.

use super::MetricError;
use crate::Scalar;

/// Square matrix stored row-major. Symmetry is maintained by the
/// constructors and operations that claim it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> SymMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_diagonal(d: &[F]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Row-major data; the result is symmetrized as `(A + A^T) / 2`.
    pub fn from_row_major(n: usize, data: Vec<F>) -> Result<Self, MetricError> {
        if data.len() != n * n {
            return Err(MetricError::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn trace(&self) -> F {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> F {
        self.data.iter().map(|&v| v * v).sum::<F>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn symmetrize(&mut self) {
        let half = F::lit(0.5);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    pub fn add_diagonal(&mut self, v: F) {
        for i in 0..self.n {
            let d = self.get(i, i);
            self.set(i, i, d + v);
        }
    }

    /// `A * B * A`, symmetrized. Both operands must be symmetric.
    pub fn sandwich(&self, inner: &SymMatrix<F>) -> SymMatrix<F> {
        let n = self.n;
        let mut tmp = vec![F::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == F::zero() {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] = tmp[i * n + j] + a * inner.get(k, j);
                }
            }
        }
        let mut out = vec![F::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = tmp[i * n + k];
                for j in 0..n {
                    out[i * n + j] = out[i * n + j] + a * self.get(k, j);
                }
            }
        }
        let mut m = SymMatrix { n, data: out };
        m.symmetrize();
        m
    }
}

#[derive(Debug, Clone)]
pub struct Eigen<F> {
    pub values: Vec<F>,
    /// Column `k` (row-major storage) is the eigenvector of `values[k]`.
    pub vectors: Option<Basis<F>>,
}

/// Plain square matrix, used for eigenvector bases.
#[derive(Debug, Clone)]
pub struct Basis<F> {
    pub n: usize,
    pub data: Vec<F>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `1e-12 * max(||A||_F, 1)` (or the type's precision floor).
pub fn jacobi_eigen<F: Scalar>(
    matrix: &SymMatrix<F>,
    want_vectors: bool,
) -> Result<Eigen<F>, MetricError> {
    if !matrix.is_finite() {
        return Err(MetricError::NonFinite);
    }
    let n = matrix.dim();
    let mut a = matrix.data.clone();
    let mut v = if want_vectors {
        Some(SymMatrix::<F>::identity(n).data)
    } else {
        None
    };

    let scale = matrix.frobenius().max(F::one());
    let rel = F::lit(1e-12).max(F::epsilon() * F::lit(n.max(1) as f64));
    let tol = rel * scale;

    let off = |a: &[F]| -> F {
        let mut s = F::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) < tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(MetricError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == F::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (F::lit(2.0) * apq);
                let t = if tau >= F::zero() {
                    F::one() / (tau + (F::one() + tau * tau).sqrt())
                } else {
                    -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = F::zero();
                a[q * n + p] = F::zero();
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        converged = off(&a) < tol;
    }

    Ok(Eigen {
        values: (0..n).map(|i| a[i * n + i]).collect(),
        vectors: v.map(|data| Basis { n, data }),
    })
}

/// Symmetric PSD square root `V diag(sqrt(max(l, 0))) V^T`.
pub fn sqrt_psd<F: Scalar>(matrix: &SymMatrix<F>) -> Result<SymMatrix<F>, MetricError> {
    let eig = jacobi_eigen(matrix, true)?;
    let vecs = eig.vectors.expect("requested eigenvectors");
    let n = matrix.dim();
    let roots: Vec<F> = eig
        .values
        .iter()
        .map(|&l| l.max(F::zero()).sqrt())
        .collect();
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = F::zero();
            for k in 0..n {
                s = s + vecs.data[i * n + k] * roots[k] * vecs.data[j * n + k];
            }
            out.set(i, j, s);
            out.set(j, i, s);
        }
    }
    Ok(out)
}

/// Singular values of the square matrix whose columns are `cols`, by
/// one-sided (Hestenes) Jacobi orthogonalization.
pub fn singular_values<F: Scalar>(mut cols: Vec<Vec<F>>) -> Result<Vec<F>, MetricError> {
    if cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let n = cols.len();
    let tol = F::epsilon() * F::lit(n.max(1) as f64);
    let dot = |a: &[F], b: &[F]| -> F { a.iter().zip(b).map(|(&x, &y)| x * y).sum() };
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == F::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (F::lit(2.0) * gamma);
                let t = if zeta >= F::zero() {
                    F::one() / (zeta + (F::one() + zeta * zeta).sqrt())
                } else {
                    -F::one() / (-zeta + (F::one() + zeta * zeta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (bp, bq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*bp, *bq);
                    *bp = c * x - s * y;
                    *bq = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == MAX_SWEEPS {
            return Err(MetricError::NoConvergence { sweeps });
        }
    }
    Ok(cols.iter().map(|c| dot(c, c).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        SymMatrix::from_row_major(n, data).unwrap()
    }

    #[test]
    fn reconstructs_matrix() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (16, 4)] {
            let m = random_sym(n, seed);
            let eig = jacobi_eigen(&m, true).unwrap();
            let v = eig.vectors.unwrap();
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n)
                        .map(|k| v.data[i * n + k] * eig.values[k] * v.data[j * n + k])
                        .sum();
                    assert!((r - m.get(i, j)).abs() < 1e-10, "n={n}");
                }
            }
            let tr: f64 = eig.values.iter().sum();
            assert!((tr - m.trace()).abs() < 1e-10);
        }
    }

    #[test]
    fn known_2x2() {
        let m = SymMatrix::<f64>::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let mut vals = jacobi_eigen(&m, false).unwrap().values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn square_root_squares_back() {
        let n = 12;
        let b = random_sym(n, 9);
        // B B is PSD
        let id = SymMatrix::identity(n);
        let psd = b.sandwich(&id);
        let root = sqrt_psd(&psd).unwrap();
        let back = root.sandwich(&id);
        for (x, y) in back.as_slice().iter().zip(psd.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_values_match_eigen_of_gram() {
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mut sv = singular_values(cols.clone()).unwrap();
        let gram: Vec<f64> = (0..n * n)
            .map(|k| (0..n).map(|r| cols[k / n][r] * cols[k % n][r]).sum())
            .collect();
        let mut ev: Vec<f64> = jacobi_eigen(&SymMatrix::from_row_major(n, gram).unwrap(), false)
            .unwrap()
            .values
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        sv.sort_by(f64::total_cmp);
        ev.sort_by(f64::total_cmp);
        for (a, b) in sv.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-9);
        }
        // transposition leaves singular values unchanged
        let t: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| cols[i][j]).collect())
            .collect();
        let mut st = singular_values(t).unwrap();
        st.sort_by(f64::total_cmp);
        for (a, b) in sv.iter().zip(&st) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::from_row_major(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
        assert!(matches!(
            jacobi_eigen(&m, false),
            Err(MetricError::NonFinite)
        ));
    }

    #[test]
    fn works_in_f32() {
        let m = SymMatrix::<f32>::from_row_major(2, vec![4.0, 0.0, 0.0, 9.0]).unwrap();
        let r = sqrt_psd(&m).unwrap();
        assert!((r.get(0, 0) - 2.0).abs() < 1e-6 && (r.get(1, 1) - 3.0).abs() < 1e-6);
    }
}
