//! Least-squares fitting: Levenberg-Marquardt for the exponential and power
//! families, Householder QR for polynomials. An optional anchor `(L, 0)`
//! is imposed exactly by eliminating the constant term.

use super::{CurveError, CurveFamily, RateQualityCurve, SamplePoint};
use crate::metrics::MetricKind;
use crate::Scalar;

pub const MULTI_STARTS: usize = 16;
pub const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-12;
const R2_TIE: f64 = 1e-12;

pub fn fit_curve<F: Scalar>(
    samples: &[SamplePoint],
    family: CurveFamily,
) -> Result<RateQualityCurve<F>, CurveError> {
    let (xs, ys, metric) = columns(samples)?;
    fit_xy(&xs, &ys, family, None, metric)
}

/// Fits every candidate and keeps the highest r²; within `1e-12` the family
/// with fewer parameters wins, then the earlier candidate.
pub fn select_family<F: Scalar>(
    samples: &[SamplePoint],
    candidates: &[CurveFamily],
) -> Result<(CurveFamily, RateQualityCurve<F>), CurveError> {
    let (xs, ys, metric) = columns(samples)?;
    select_xy(&xs, &ys, candidates, None, metric)
}

fn columns<F: Scalar>(samples: &[SamplePoint]) -> Result<(Vec<F>, Vec<F>, MetricKind), CurveError> {
    let metric = samples
        .first()
        .map(|s| s.metric)
        .ok_or(CurveError::TooFewSamples {
            needed: 1,
            actual: 0,
        })?;
    for s in samples {
        s.validate()?;
        if s.metric != metric {
            return Err(CurveError::MixedMetrics);
        }
    }
    Ok((
        samples.iter().map(|s| F::lit(s.bpp)).collect(),
        samples.iter().map(|s| F::lit(s.value)).collect(),
        metric,
    ))
}

pub(crate) fn select_xy<F: Scalar>(
    xs: &[F],
    ys: &[F],
    candidates: &[CurveFamily],
    anchor: Option<F>,
    metric: MetricKind,
) -> Result<(CurveFamily, RateQualityCurve<F>), CurveError> {
    let mut best: Option<RateQualityCurve<F>> = None;
    for &fam in candidates {
        let c = fit_xy(xs, ys, fam, anchor, metric)?;
        let better = match &best {
            None => true,
            Some(b) => {
                let diff = c.r2() - b.r2();
                if diff.abs() <= F::lit(R2_TIE) {
                    fam.param_count() < b.family().param_count()
                } else {
                    diff > F::zero()
                }
            }
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.ok_or(CurveError::NoCandidates)?;
    Ok((best.family(), best))
}

/// Fits `family` to the points. With `anchor = Some(L)` the fitted function
/// is constrained to vanish at `L`; the anchor point itself is expected to
/// be among the samples. The domain is the sample abscissa range.
pub(crate) fn fit_xy<F: Scalar>(
    xs: &[F],
    ys: &[F],
    family: CurveFamily,
    anchor: Option<F>,
    metric: MetricKind,
) -> Result<RateQualityCurve<F>, CurveError> {
    family.check()?;
    let needed = family.param_count();
    if xs.len() < needed {
        return Err(CurveError::TooFewSamples {
            needed,
            actual: xs.len(),
        });
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite abscissas"));
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CurveError::DuplicateAbscissa(w[0].to_f64_lossy()));
    }
    let (x_lo, x_hi) = (sorted[0], sorted[sorted.len() - 1]);

    if anchor.is_none() && ys.iter().all(|&y| y == ys[0]) {
        // SS_tot = 0: r² is undefined, report the exact constant fit
        let params = match family {
            CurveFamily::Polynomial(d) => std::iter::once(ys[0])
                .chain(vec![F::zero(); d as usize])
                .collect(),
            _ => vec![F::zero(), F::one(), ys[0]],
        };
        return RateQualityCurve::new(family, params, x_lo, x_hi, metric, F::one());
    }
    let params = match family {
        CurveFamily::Polynomial(d) => fit_polynomial(xs, ys, d as usize, anchor)?,
        CurveFamily::ExponentialDecay | CurveFamily::PowerLaw => {
            let model = Nonlinear {
                power: family == CurveFamily::PowerLaw,
                anchor,
            };
            model.full(&model.fit(xs, ys).0)
        }
    };
    let r2 = r_squared(xs, ys, |x| super::family_value(family, &params, x));
    RateQualityCurve::new(family, params, x_lo, x_hi, metric, r2)
}

/// `1 - SS_res / SS_tot`; 1 when the ordinates are constant and matched.
pub(crate) fn r_squared<F: Scalar>(xs: &[F], ys: &[F], f: impl Fn(F) -> F) -> F {
    let n = F::lit(ys.len() as f64);
    let mean = ys.iter().copied().sum::<F>() / n;
    let ss_tot: F = ys.iter().map(|&y| (y - mean) * (y - mean)).sum();
    let ss_res: F = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (f(x) - y) * (f(x) - y))
        .sum();
    if ss_tot == F::zero() {
        return if ss_res == F::zero() {
            F::one()
        } else {
            F::zero()
        };
    }
    F::one() - ss_res / ss_tot
}

struct Nonlinear<F> {
    power: bool,
    anchor: Option<F>,
}

impl<F: Scalar> Nonlinear<F> {
    /// Basis value and its derivative in `b`.
    fn phi(&self, x: F, b: F) -> (F, F) {
        if self.power {
            let v = x.powf(-b);
            (v, -x.ln() * v)
        } else {
            let v = (-b * x).exp();
            (v, -x * v)
        }
    }

    fn n_free(&self) -> usize {
        if self.anchor.is_some() {
            2
        } else {
            3
        }
    }

    fn full(&self, p: &[F]) -> Vec<F> {
        match self.anchor {
            Some(l) => vec![p[0], p[1], -p[0] * self.phi(l, p[1]).0],
            None => p.to_vec(),
        }
    }

    fn feasible(p: &[F]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[0] >= F::zero() && p[1] > F::zero()
    }

    fn value_grad(&self, x: F, p: &[F], grad: &mut [F]) -> F {
        let (v, vb) = self.phi(x, p[1]);
        match self.anchor {
            Some(l) => {
                let (w, wb) = self.phi(l, p[1]);
                grad[0] = v - w;
                grad[1] = p[0] * (vb - wb);
                p[0] * (v - w)
            }
            None => {
                grad[0] = v;
                grad[1] = p[0] * vb;
                grad[2] = F::one();
                p[0] * v + p[2]
            }
        }
    }

    fn ss(&self, xs: &[F], ys: &[F], p: &[F]) -> F {
        let mut g = [F::zero(); 3];
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let r = self.value_grad(x, p, &mut g) - y;
                r * r
            })
            .sum()
    }

    fn starts(&self, xs: &[F], ys: &[F]) -> Vec<Vec<F>> {
        let (lo, hi) = ys
            .iter()
            .fold((F::infinity(), F::neg_infinity()), |(lo, hi), &y| {
                (lo.min(y), hi.max(y))
            });
        let span = if hi > lo { hi - lo } else { F::one() };
        let x_mean = xs.iter().map(|x| x.abs()).sum::<F>() / F::lit(xs.len() as f64);
        let x_scale = if x_mean > F::zero() { x_mean } else { F::one() };
        let mut out = Vec::with_capacity(MULTI_STARTS);
        for i in 0..4 {
            let a = span * F::lit(10f64.powf(-1.0 + 2.0 * i as f64 / 3.0));
            for j in 0..4 {
                let b = if self.power {
                    F::lit(10f64.powf(-2.0 + 2.0 * j as f64 / 3.0))
                } else {
                    F::lit(10f64.powf(-1.5 + j as f64)) / x_scale
                };
                let mut p = vec![a, b];
                if self.anchor.is_none() {
                    p.push(lo);
                }
                out.push(p);
            }
        }
        out
    }

    /// Best visited point over all starts and its residual sum of squares.
    fn fit(&self, xs: &[F], ys: &[F]) -> (Vec<F>, F) {
        let mut best: Option<(Vec<F>, F)> = None;
        let mut consider = |p: &[F], ss: F| {
            if ss.is_finite() && best.as_ref().is_none_or(|(_, b)| ss < *b) {
                best = Some((p.to_vec(), ss));
            }
        };
        for start in self.starts(xs, ys) {
            let ss0 = self.ss(xs, ys, &start);
            consider(&start, ss0);
            if !ss0.is_finite() {
                continue;
            }
            let (p, ss) = self.levenberg_marquardt(xs, ys, start, ss0);
            consider(&p, ss);
        }
        best.unwrap_or_else(|| {
            let p = self.starts(xs, ys).swap_remove(0);
            let ss = self.ss(xs, ys, &p);
            (p, ss)
        })
    }

    fn levenberg_marquardt(&self, xs: &[F], ys: &[F], mut p: Vec<F>, mut ss: F) -> (Vec<F>, F) {
        let n = self.n_free();
        let mut mu = F::lit(1e-3);
        let mut grad = [F::zero(); 3];
        for _ in 0..MAX_ITERATIONS {
            if ss == F::zero() {
                break;
            }
            let mut jtj = [[F::zero(); 3]; 3];
            let mut jtr = [F::zero(); 3];
            for (&x, &y) in xs.iter().zip(ys) {
                let r = self.value_grad(x, &p, &mut grad) - y;
                for i in 0..n {
                    jtr[i] = jtr[i] + grad[i] * r;
                    for k in 0..n {
                        jtj[i][k] = jtj[i][k] + grad[i] * grad[k];
                    }
                }
            }
            let diag_floor = F::lit(1e-15) * (0..n).map(|i| jtj[i][i]).fold(F::one(), F::max);
            let mut accepted = None;
            while mu < F::lit(1e20) {
                let mut m = jtj;
                for (i, row) in m.iter_mut().enumerate().take(n) {
                    row[i] = row[i] + mu * (jtj[i][i] + diag_floor);
                }
                let rhs: Vec<F> = jtr[..n].iter().map(|&g| -g).collect();
                if let Some(step) = solve_small(&m, &rhs, n) {
                    let cand: Vec<F> = p.iter().zip(&step).map(|(&a, &d)| a + d).collect();
                    if Self::feasible(&cand) {
                        let ss_c = self.ss(xs, ys, &cand);
                        if ss_c.is_finite() && ss_c < ss {
                            accepted = Some((cand, ss_c));
                            break;
                        }
                    }
                }
                mu = mu * F::lit(10.0);
            }
            let Some((cand, ss_c)) = accepted else { break };
            let rel = (ss - ss_c) / ss;
            p = cand;
            ss = ss_c;
            mu = (mu / F::lit(10.0)).max(F::lit(1e-12));
            if rel < F::lit(REL_TOL) {
                break;
            }
        }
        (p, ss)
    }
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve_small<F: Scalar>(m: &[[F; 3]; 3], rhs: &[F], n: usize) -> Option<Vec<F>> {
    let mut a = *m;
    let mut b = rhs.to_vec();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col] == F::zero() || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let s: F = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Coefficients `p_0..p_d` (ascending powers) minimizing squared error;
/// with an anchor `L`, constrained to `p(L) = 0`.
fn fit_polynomial<F: Scalar>(
    xs: &[F],
    ys: &[F],
    degree: usize,
    anchor: Option<F>,
) -> Result<Vec<F>, CurveError> {
    let powers: Vec<usize> = match anchor {
        Some(_) => (1..=degree).collect(),
        None => (0..=degree).collect(),
    };
    let basis = |x: F, k: usize| match anchor {
        Some(l) => x.powi(k as i32) - l.powi(k as i32),
        None => x.powi(k as i32),
    };
    let cols: Vec<Vec<F>> = powers
        .iter()
        .map(|&k| xs.iter().map(|&x| basis(x, k)).collect())
        .collect();
    let coef = householder_lstsq(cols, ys.to_vec())
        .ok_or_else(|| CurveError::InvalidSample("rank-deficient polynomial design".into()))?;
    Ok(match anchor {
        Some(l) => {
            let c0 = -powers
                .iter()
                .zip(&coef)
                .map(|(&k, &c)| c * l.powi(k as i32))
                .sum::<F>();
            std::iter::once(c0).chain(coef).collect()
        }
        None => coef,
    })
}

/// Solves `min |A x - b|` for `A` given by columns (each of length `m`).
pub(crate) fn householder_lstsq<F: Scalar>(mut cols: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = cols.len();
    let m = b.len();
    if n > m {
        return None;
    }
    let scale = cols.iter().flatten().fold(F::zero(), |s, v| s.max(v.abs()));
    for k in 0..n {
        let norm = cols[k][k..].iter().map(|&v| v * v).sum::<F>().sqrt();
        if norm <= F::epsilon() * scale * F::lit(m as f64) {
            return None;
        }
        let alpha = if cols[k][k] > F::zero() { -norm } else { norm };
        let mut v: Vec<F> = cols[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vv: F = v.iter().map(|&t| t * t).sum();
        if vv == F::zero() {
            continue;
        }
        let reflect = |col: &mut [F]| {
            let s: F = v.iter().zip(col.iter()).map(|(&a, &c)| a * c).sum();
            let f = F::lit(2.0) * s / vv;
            for (c, &a) in col.iter_mut().zip(&v) {
                *c = *c - f * a;
            }
        };
        for col in cols.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let s: F = (i + 1..n).map(|j| cols[j][i] * x[j]).sum();
        x[i] = (b[i] - s) / cols[i][i];
    }
    Some(x)
}
