//! Continuous rate-quality functions fitted to (bpp, quality) samples.

mod build;
mod fit;
mod io;
mod measure;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::ImageError;
use crate::metrics::{MetricError, MetricKind};
use crate::Scalar;

pub use build::{
    build_pe_curve, build_ps_curve, estimate_fid_max, fit_pe_curve, PeCurve, PE_FAMILIES,
    PS_FAMILIES,
};
pub use fit::{fit_curve, select_family, MAX_ITERATIONS, MULTI_STARTS};
pub use io::{read_samples_csv, write_samples_csv, CurveRecord};
pub use measure::{measure_samples, MeasureConfig};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(f64),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("samples mix metrics")]
    MixedMetrics,
    #[error("{x} outside curve domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("sample at {bpp} bpp is not below the true-image size {true_bpp}")]
    AnchorConflict { bpp: f64, true_bpp: f64 },
    #[error("no candidate families")]
    NoCandidates,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Genai,
    Jpeg,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Genai, Scheme::Jpeg];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Genai => "genai",
            Scheme::Jpeg => "jpeg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "PE")]
    Pe,
    #[serde(rename = "PS-low")]
    PsLow,
    #[serde(rename = "PS-med")]
    PsMed,
    #[serde(rename = "PS-high")]
    PsHigh,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Pe,
        Strategy::PsLow,
        Strategy::PsMed,
        Strategy::PsHigh,
    ];
    pub const PS: [Strategy; 3] = [Strategy::PsLow, Strategy::PsMed, Strategy::PsHigh];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Pe => "PE",
            Strategy::PsLow => "PS-low",
            Strategy::PsMed => "PS-med",
            Strategy::PsHigh => "PS-high",
        }
    }

    pub fn is_ps(self) -> bool {
        self != Strategy::Pe
    }
}

macro_rules! str_traits {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .into_iter()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| format!("unknown {} {s:?}", stringify!($t).to_lowercase()))
            }
        }
    };
}

str_traits!(Scheme);
str_traits!(Strategy);

/// One dataset-average measurement.
///
/// Distortion values are normalized MSE in `[0, 1]`. Perception values may
/// be raw FID (any non-negative value) until they are normalized against
/// `fid_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub bpp: f64,
    pub value: f64,
    pub metric: MetricKind,
    pub scheme: Scheme,
    pub strategy: Strategy,
}

impl SamplePoint {
    pub fn new(
        bpp: f64,
        value: f64,
        metric: MetricKind,
        scheme: Scheme,
        strategy: Strategy,
    ) -> Result<Self, CurveError> {
        let p = Self {
            bpp,
            value,
            metric,
            scheme,
            strategy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if !(self.bpp > 0.0) || !self.bpp.is_finite() {
            return Err(CurveError::InvalidSample(format!(
                "bpp {} must be > 0",
                self.bpp
            )));
        }
        if !(self.value >= 0.0) || !self.value.is_finite() {
            return Err(CurveError::InvalidSample(format!(
                "value {} must be >= 0",
                self.value
            )));
        }
        if self.metric == MetricKind::Distortion && self.value > 1.0 {
            return Err(CurveError::InvalidSample(format!(
                "normalized distortion {} exceeds 1",
                self.value
            )));
        }
        Ok(())
    }
}

/// Parametric shape of a rate-quality function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveFamily {
    /// `a * exp(-b x) + c`
    ExponentialDecay,
    /// `a * x^(-b) + c`
    PowerLaw,
    /// `sum_k p_k x^k`, degree 1 to 3
    Polynomial(u8),
}

impl CurveFamily {
    pub fn param_count(self) -> usize {
        match self {
            CurveFamily::ExponentialDecay | CurveFamily::PowerLaw => 3,
            CurveFamily::Polynomial(d) => d as usize + 1,
        }
    }

    pub fn name(self) -> String {
        match self {
            CurveFamily::ExponentialDecay => "exponential-decay".into(),
            CurveFamily::PowerLaw => "power-law".into(),
            CurveFamily::Polynomial(d) => format!("polynomial-{d}"),
        }
    }

    fn check(self) -> Result<(), CurveError> {
        match self {
            CurveFamily::Polynomial(d) if !(1..=3).contains(&d) => Err(CurveError::InvalidCurve(
                format!("polynomial degree {d} outside 1..=3"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CurveFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fam = match s {
            "exponential-decay" => CurveFamily::ExponentialDecay,
            "power-law" => CurveFamily::PowerLaw,
            _ => match s
                .strip_prefix("polynomial-")
                .and_then(|d| d.parse::<u8>().ok())
            {
                Some(d) => CurveFamily::Polynomial(d),
                None => return Err(format!("unknown curve family {s:?}")),
            },
        };
        fam.check().map_err(|e| e.to_string())?;
        Ok(fam)
    }
}

impl Serialize for CurveFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for CurveFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A fitted function `delta(L_p)` on a bpp domain, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateQualityCurve<F> {
    family: CurveFamily,
    params: Vec<F>,
    x_lo: F,
    x_hi: F,
    metric: MetricKind,
    r2: F,
}

impl<F: Scalar> RateQualityCurve<F> {
    pub fn new(
        family: CurveFamily,
        params: Vec<F>,
        x_lo: F,
        x_hi: F,
        metric: MetricKind,
        r2: F,
    ) -> Result<Self, CurveError> {
        family.check()?;
        if params.len() != family.param_count() {
            return Err(CurveError::InvalidCurve(format!(
                "{family} takes {} parameters, got {}",
                family.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) || !r2.is_finite() {
            return Err(CurveError::InvalidCurve("non-finite parameter".into()));
        }
        if matches!(
            family,
            CurveFamily::ExponentialDecay | CurveFamily::PowerLaw
        ) && (params[0] < F::zero() || params[1] <= F::zero())
        {
            return Err(CurveError::InvalidCurve(format!(
                "{family} needs a >= 0 and b > 0, got a = {}, b = {}",
                params[0], params[1]
            )));
        }
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(CurveError::InvalidCurve(format!(
                "domain [{x_lo}, {x_hi}] is empty"
            )));
        }
        if family == CurveFamily::PowerLaw && x_lo <= F::zero() {
            return Err(CurveError::InvalidCurve(
                "power-law domain must be positive".into(),
            ));
        }
        Ok(Self {
            family,
            params,
            x_lo,
            x_hi,
            metric,
            r2,
        })
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn domain(&self) -> (F, F) {
        (self.x_lo, self.x_hi)
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn r2(&self) -> F {
        self.r2
    }

    /// Same function on a different domain.
    pub fn with_domain(&self, x_lo: F, x_hi: F) -> Result<Self, CurveError> {
        Self::new(
            self.family,
            self.params.clone(),
            x_lo,
            x_hi,
            self.metric,
            self.r2,
        )
    }

    /// The fitted function itself, with no domain check or clamping.
    pub fn raw(&self, x: F) -> F {
        family_value(self.family, &self.params, x)
    }

    pub fn eval(&self, x: F) -> Result<F, CurveError> {
        if !(x >= self.x_lo && x <= self.x_hi) {
            return Err(CurveError::OutOfDomain {
                x: x.to_f64_lossy(),
                lo: self.x_lo.to_f64_lossy(),
                hi: self.x_hi.to_f64_lossy(),
            });
        }
        Ok(self.raw(x).max(F::zero()).min(F::one()))
    }

    /// True when `eval` never increases over `grid` evenly spaced points.
    pub fn is_non_increasing(&self, grid: usize) -> bool {
        let grid = grid.max(2);
        let step = (self.x_hi - self.x_lo) / F::lit((grid - 1) as f64);
        let mut prev = F::infinity();
        for i in 0..grid {
            let x = if i + 1 == grid {
                self.x_hi
            } else {
                self.x_lo + step * F::lit(i as f64)
            };
            let v = self.eval(x).expect("grid lies in the domain");
            if v > prev {
                return false;
            }
            prev = v;
        }
        true
    }
}

pub(crate) fn family_value<F: Scalar>(family: CurveFamily, p: &[F], x: F) -> F {
    match family {
        CurveFamily::ExponentialDecay => p[0] * (-p[1] * x).exp() + p[2],
        CurveFamily::PowerLaw => p[0] * x.powf(-p[1]) + p[2],
        CurveFamily::Polynomial(_) => p.iter().rev().fold(F::zero(), |acc, &c| acc * x + c),
    }
}
