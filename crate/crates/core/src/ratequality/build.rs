use super::fit::{fit_xy, select_xy};
use super::{CurveError, CurveFamily, RateQualityCurve, SamplePoint};
use crate::metrics::{normalize_fid, MetricError, MetricKind};
use crate::Scalar;

/// Candidate families for prompt-extension curves.
pub const PE_FAMILIES: [CurveFamily; 2] = [CurveFamily::ExponentialDecay, CurveFamily::PowerLaw];

/// Candidate families for pixel-swapping curves.
pub const PS_FAMILIES: [CurveFamily; 5] = [
    CurveFamily::ExponentialDecay,
    CurveFamily::PowerLaw,
    CurveFamily::Polynomial(1),
    CurveFamily::Polynomial(2),
    CurveFamily::Polynomial(3),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PeCurve<F> {
    pub curve: RateQualityCurve<F>,
    /// Normalization constant used for perception curves.
    pub fid_max: Option<F>,
}

/// Tier abscissas and ordinates followed by the anchor `(L, 0)`.
fn anchored_points<F: Scalar>(
    points: &[SamplePoint],
    true_bpp: F,
) -> Result<(Vec<F>, Vec<F>), CurveError> {
    if !(true_bpp > F::zero()) || !true_bpp.is_finite() {
        return Err(CurveError::InvalidSample(format!(
            "true-image size {true_bpp} must be > 0"
        )));
    }
    let mut xs = Vec::with_capacity(points.len() + 1);
    let mut ys = Vec::with_capacity(points.len() + 1);
    for p in points {
        p.validate()?;
        let x = F::lit(p.bpp);
        if x >= true_bpp {
            return Err(CurveError::AnchorConflict {
                bpp: p.bpp,
                true_bpp: true_bpp.to_f64_lossy(),
            });
        }
        xs.push(x);
        ys.push(F::lit(p.value));
    }
    xs.push(true_bpp);
    ys.push(F::zero());
    Ok((xs, ys))
}

fn single_metric(points: &[SamplePoint]) -> Result<MetricKind, CurveError> {
    let metric = points
        .first()
        .ok_or(CurveError::TooFewSamples {
            needed: 1,
            actual: 0,
        })?
        .metric;
    if points.iter().any(|p| p.metric != metric) {
        return Err(CurveError::MixedMetrics);
    }
    Ok(metric)
}

/// First normalization pass: an anchored exponential fitted to raw FID
/// values, evaluated at zero prompt size.
pub fn estimate_fid_max<F: Scalar>(
    tier_points: &[SamplePoint],
    true_bpp: F,
) -> Result<F, CurveError> {
    let (xs, ys) = anchored_points(tier_points, true_bpp)?;
    let first = fit_xy(
        &xs,
        &ys,
        CurveFamily::ExponentialDecay,
        Some(true_bpp),
        MetricKind::Perception,
    )?;
    let fid_max = first.raw(F::zero());
    if !(fid_max > F::zero()) || !fid_max.is_finite() {
        return Err(MetricError::NonPositiveMax(fid_max.to_f64_lossy()).into());
    }
    Ok(fid_max)
}

/// Fits normalized tier points plus the anchor `(L, 0)`, which the fitted
/// function passes through exactly. Domain: smallest tier bpp to `L`.
pub fn fit_pe_curve<F: Scalar>(
    points: &[SamplePoint],
    true_bpp: F,
    candidates: &[CurveFamily],
) -> Result<RateQualityCurve<F>, CurveError> {
    let metric = single_metric(points)?;
    if let Some(p) = points.iter().find(|p| p.value > 1.0) {
        return Err(CurveError::InvalidSample(format!(
            "value {} is not normalized",
            p.value
        )));
    }
    let (xs, ys) = anchored_points(points, true_bpp)?;
    Ok(select_xy(&xs, &ys, candidates, Some(true_bpp), metric)?.1)
}

/// Prompt-extension curve from tier measurements. Perception points carry
/// raw FID; they are normalized by [`estimate_fid_max`] before the final fit.
pub fn build_pe_curve<F: Scalar>(
    tier_points: &[SamplePoint],
    true_bpp: F,
    candidates: &[CurveFamily],
) -> Result<PeCurve<F>, CurveError> {
    match single_metric(tier_points)? {
        MetricKind::Distortion => Ok(PeCurve {
            curve: fit_pe_curve(tier_points, true_bpp, candidates)?,
            fid_max: None,
        }),
        MetricKind::Perception => {
            let fid_max = estimate_fid_max(tier_points, true_bpp)?;
            let normalized = normalize_points(tier_points, fid_max)?;
            Ok(PeCurve {
                curve: fit_pe_curve(&normalized, true_bpp, candidates)?,
                fid_max: Some(fid_max),
            })
        }
    }
}

/// Divides perception values by `fid_max` (clamped at 1); distortion
/// points pass through.
pub(crate) fn normalize_points<F: Scalar>(
    points: &[SamplePoint],
    fid_max: F,
) -> Result<Vec<SamplePoint>, CurveError> {
    points
        .iter()
        .map(|p| {
            let mut q = *p;
            if p.metric == MetricKind::Perception {
                q.value = normalize_fid(F::lit(p.value), fid_max)?.to_f64_lossy();
            }
            Ok(q)
        })
        .collect()
}

/// Pixel-swapping curve over `[L_p, L_p + L]` from normalized samples taken
/// at `L_p + gamma * L`.
pub fn build_ps_curve<F: Scalar>(
    samples: &[SamplePoint],
    prompt_bpp: F,
    true_bpp: F,
    candidates: &[CurveFamily],
) -> Result<RateQualityCurve<F>, CurveError> {
    let metric = single_metric(samples)?;
    let (lo, hi) = (prompt_bpp, prompt_bpp + true_bpp);
    let slack = F::lit(1e-9) * hi.max(F::one());
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        s.validate()?;
        let x = F::lit(s.bpp);
        if x < lo - slack || x > hi + slack || s.value > 1.0 {
            return Err(CurveError::InvalidSample(format!(
                "({}, {}) outside [{lo}, {hi}] x [0, 1]",
                s.bpp, s.value
            )));
        }
        xs.push(x);
        ys.push(F::lit(s.value));
    }
    let (_, curve) = select_xy(&xs, &ys, candidates, None, metric)?;
    curve.with_domain(lo, hi)
}
